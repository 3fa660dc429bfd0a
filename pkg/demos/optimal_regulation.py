"""Solve for the welfare-maximizing interval and fallback contract.

Runs the three bargaining regimes on a uniform prior, then traces how the
optimal minimum quality reacts once inequity aversion passes the point
where it starts to bind.  The sweep is also written out as CSV.
"""

import sys

from default_delegation.domain import Power, Quadratic, Uniform01, WelfareParams
from default_delegation.policy_solver import backward_bias_check, solve
from default_delegation.statics import compare_fosd, sweep


def show(label, rep):
    p = rep.policy
    print(f"{label:<28} q_min={p.q_min:.4f} q_max={p.q_max:.4f} q_d={p.q_d:.4f} "
          f"c_d={p.c_d:.4f}  welfare={rep.expected_welfare:.5f}  [{rep.branch}]")


def main(csv_path=None):
    prefs, prior = Quadratic(revenue=1.0), Uniform01()
    params = WelfareParams(beta=1.0, gamma=0.2)

    print("Optimal policy by bargaining regime (beta=1, gamma=0.2)")
    for delta, label in ((0.5, "even split"), (0.0, "firm makes the offer"), (1.0, "worker makes the offer")):
        show(label, solve(prefs, params, delta, prior))

    rep = backward_bias_check(prefs, params, 0.5, prior, (0.5, 1 / 2 - 1 / 12))
    print(f"\nInterval delegation check: T'' ranges over [{rep.T_second.min():.4f}, "
          f"{rep.T_second.max():.4f}], convex={rep.convex}")

    fosd = compare_fosd(prefs, WelfareParams(beta=1.0, gamma=0.4), prior, Power(2))
    print(f"Shifting the prior up: {fosd.ordering}")

    print("\nMinimum quality as inequity aversion grows (firm makes the offer, gamma=0)")
    table = sweep(prefs, WelfareParams(gamma=0.0), 0.0, prior, "beta", [0, 1, 1.9, 2.1, 3, 5])
    for row in table.rows:
        bar = "#" * int(200 * row.q_min)
        print(f"  beta={row.value:4.1f}  q_min={row.q_min:.4f}  {bar}")

    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write(table.to_csv())
        print(f"wrote {csv_path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
