"""When can a fallback contract deliver the first best in every state?

Two states: yes, and we build the contract and verify nobody gains by
misreporting.  Three states: generically no, except for a hand-built
instance where every pairwise condition shares a root.
"""

import numpy as np

from default_delegation.domain import Quadratic, TabulatedPrefs, WelfareParams
from default_delegation.implementability import (
    check_multi_state,
    maxmin_construct,
    solve_default_two_state,
    two_state_game,
    verify_no_deviation,
)


def main():
    prefs, params = Quadratic(revenue=1.0), WelfareParams(beta=1.0)

    cert = solve_default_two_state(prefs, params, 0.0, (0.0, 1.0))
    print(f"Two states: default ({cert.q_d:.6f}, {cert.c_d:.6f}), feasible={cert.feasible}")
    for (q, c), fb in zip(cert.replay, cert.first_best):
        print(f"  theta={fb.theta}: bargaining lands on ({q:.4f}, {c:.4f}), first best ({fb.q:.4f}, {fb.c:.4f})")
    dev = verify_no_deviation(two_state_game(cert), prefs, 0.0)
    print(f"  truthful reporting is an equilibrium: {dev.equilibrium} "
          f"({len(dev.binding)} of {len(dev.residuals)} constraints hold with equality)")

    rep = check_multi_state(prefs, params, 0.0, (0.0, 0.5, 1.0))
    print(f"\nThree states: feasible={rep.feasible}; {rep.reason}")

    lam = {0.0: 0.0, 0.5: 1.0, 1.0: 0.0}
    tuned = TabulatedPrefs.from_functions(
        lambda q, t: -(q - t) ** 2,
        lambda q, t: -q ** 2 + np.vectorize(lam.get)(t) * q,
        np.linspace(-1, 2, 241), np.array([0.0, 0.5, 1.0]), revenue=1.0)
    rep = check_multi_state(tuned, params, 0.0, (0.0, 0.5, 1.0))
    print(f"Tuned firm preferences: feasible={rep.feasible} at q_d={rep.q_d:.6f}")

    mm = maxmin_construct(prefs, params, 0.0, (0.0, 0.5, 1.0))
    print(f"\nProtecting the worst-off state only: theta_k={mm.theta_k}, "
          f"first best ({mm.first_best_k.q}, {mm.first_best_k.c}), feasible={mm.feasible}")


if __name__ == "__main__":
    main()
