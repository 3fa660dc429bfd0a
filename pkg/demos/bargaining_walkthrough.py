"""Walk through a single bargaining round and the welfare it produces.

A worker cares about how close quality sits to the state; the firm only
about cost.  The regulator fixes a quality interval and a fallback
contract, the two sides bargain, and we score the outcome.
"""

import numpy as np

from default_delegation.bargaining import bargain
from default_delegation.domain import Contract, Policy, Quadratic, Uniform01, WelfareParams
from default_delegation.oracle import grid_bargain, mc_expected_swf
from default_delegation.welfare import expected_swf, swf_eval


def main():
    prefs = Quadratic(revenue=1.0)
    params = WelfareParams(beta=1.0, gamma=0.0)
    policy = Policy(q_min=0.0, q_max=0.5, q_d=0.375, c_d=0.515625)

    print("State-by-state outcome when the firm has all the bargaining power")
    print(f"{'theta':>6} {'q':>8} {'c':>9} {'worker gain':>12} {'firm gain':>10} {'SWF':>8}")
    for theta in np.linspace(0, 1, 6):
        out = bargain(prefs, 0.0, policy, theta)
        welfare = swf_eval(prefs, params, Contract(out.q, out.c, theta)).total
        print(f"{theta:6.2f} {out.q:8.4f} {out.c:9.4f} {out.gain_w:12.2e} {out.gain_f:10.4f} {welfare:8.4f}")

    # the worker is held to its default utility, the firm takes the whole gain
    check = grid_bargain(prefs, 0.0, policy, 0.8)
    print(f"\nBrute-force grid agrees with the closed form to {check.discrepancy:.1e}")

    prior = Uniform01()
    quad = expected_swf(prefs, params, policy, prior, 0.0)
    mc = mc_expected_swf(prefs, params, 0.0, policy, prior, 200_000)
    print(f"Expected welfare: quadrature {quad:.6f}, Monte Carlo {mc.mean:.6f} +/- {mc.stderr:.1e}")

    print("\nSplitting the gain evenly instead (delta = 0.5):")
    for theta in (0.2, 0.8):
        out = bargain(prefs, 0.5, policy, theta)
        print(f"  theta={theta}: gains {out.gain_w:.4f} / {out.gain_f:.4f}")


if __name__ == "__main__":
    main()
