"""The thirteen acceptance criteria, each at its stated tolerance."""

import numpy as np

from default_delegation.bargaining import bargain, joint_surplus_maximizer
from default_delegation.domain import Policy, Power, Quadratic, TabulatedPrefs, Uniform01, WelfareParams
from default_delegation.implementability import (
    check_multi_state,
    solve_default_two_state,
    two_state_game,
    verify_no_deviation,
)
from default_delegation.oracle import grid_bargain, grid_policy_search
from default_delegation.policy_solver import (
    SEED,
    backward_bias_check,
    firm_control_default_quality,
    firm_control_end_sensitivities,
    solve,
    solve_numeric,
)
from default_delegation.statics import compare_fosd, sweep
from default_delegation.welfare import expected_swf

R = 1.0
PREFS = Quadratic(revenue=R)
UNIFORM = Uniform01()


def close(a, b, tol):
    return abs(a - b) <= tol


def test_criterion_01_aligned_closed_form(criterion):
    worst = 0.0
    for gamma in (0.0, 0.2, 0.5):
        p = solve(PREFS, WelfareParams(beta=1, gamma=gamma), 0.5, UNIFORM).policy
        worst = max(worst, abs(p.q_d - 0.5), abs(p.c_d - (R / 2 - 1 / 12)), abs(p.q_min - gamma / 2))
    criterion(1, worst <= 1e-6, f"max error {worst:.2e} (tol 1e-6)")


def test_criterion_02_dominating_prior(criterion):
    gamma = 0.4
    params = WelfareParams(beta=1, gamma=gamma)
    p = solve(PREFS, params, 0.5, Power(2)).policy
    err = max(abs(p.q_d - 0.6), abs(p.c_d - (R / 2 - 0.15)), abs(p.q_min - 0.75 * gamma))
    rep = compare_fosd(PREFS, params, UNIFORM, Power(2))
    ordered = rep.consistent and rep.ordering == {"q_d": "higher", "c_d": "lower", "q_min": "higher"}
    criterion(2, err <= 1e-6 and ordered, f"max error {err:.2e}, ordering {rep.ordering}")


def test_criterion_03_firm_control_closed_form(criterion):
    p = solve(PREFS, WelfareParams(beta=1, gamma=1e-6), 0.0, UNIFORM).policy
    ok = close(p.q_d, 0.375, 1e-3) and close(p.c_d, R / 2 + 1 / 64, 1e-3)
    criterion(3, ok, f"q_d={p.q_d:.6f}, c_d={p.c_d:.6f} (tol 1e-3)")


def test_criterion_04_default_quality_identity_and_slopes(criterion):
    identity = firm_control_default_quality(0.0, 0.5) == 0.375
    h = 1e-6
    lows = np.linspace(0.02, 0.2, 10)
    highs = np.linspace(0.3, 0.48, 10)
    d_lo = [(firm_control_default_quality(a + h, b) - firm_control_default_quality(a - h, b)) / (2 * h)
            for a, b in zip(lows, highs)]
    d_hi = [(firm_control_default_quality(a, b + h) - firm_control_default_quality(a, b - h)) / (2 * h)
            for a, b in zip(lows, highs)]
    ok = identity and all(d > 0 for d in d_lo) and all(d < 0 for d in d_hi)
    criterion(4, ok, f"identity {identity}; d/d(min) in [{min(d_lo):.4f}, {max(d_lo):.4f}]; "
                     f"d/d(max) in [{min(d_hi):.4f}, {max(d_hi):.4f}] (expected > 0 and < 0)")


def test_criterion_05_end_sensitivities(criterion):
    d_lo, d_hi = firm_control_end_sensitivities(PREFS, WelfareParams(beta=2), q_d=0.375)
    ok = abs(d_lo - 4) <= 0.05 * 4 and abs(d_hi + 7) <= 0.05 * 7
    criterion(5, ok, f"d(min end)/dq_d={d_lo:.4f} (target 4), d(max end)/dq_d={d_hi:.4f} (target -7)")


def test_criterion_06_backward_bias(criterion):
    rep = backward_bias_check(PREFS, WelfareParams(beta=1), 0.5, UNIFORM, (0.5, R / 2 - 1 / 12), n_samples=50)
    err = float(np.max(np.abs(rep.T_second - 0.5)))
    ok = len(rep.T_second) == 50 and not rep.flagged and err <= 1e-8
    criterion(6, ok, f"max |T'' - 1/2| = {err:.2e} over {len(rep.T_second)} samples (tol 1e-8)")


def test_criterion_07_two_state_construction(criterion):
    cert = solve_default_two_state(PREFS, WelfareParams(beta=1), 0.0, (0.0, 1.0))
    pol = Policy(-1.0, 2.0, cert.q_d, cert.c_d)
    replay = max(max(abs(out.q - fb.q), abs(out.c - fb.c))
                 for fb in cert.first_best for out in [bargain(PREFS, 0.0, pol, fb.theta)])
    dev = verify_no_deviation(two_state_game(cert), PREFS, 0.0)
    tight = len(dev.binding) == len(dev.residuals)
    ok = cert.feasible and close(cert.q_d, 0.375, 1e-9) and replay <= 1e-7 and dev.equilibrium and tight
    criterion(7, ok, f"q_d={cert.q_d:.9f}, replay error {replay:.1e}, equilibrium {dev.equilibrium}, "
                     f"{len(dev.binding)}/{len(dev.residuals)} constraints tight")


def _common_root_prefs():
    lam = {0.0: 0.0, 0.5: 1.0, 1.0: 0.0}
    return TabulatedPrefs.from_functions(
        lambda q, t: -(q - t) ** 2,
        lambda q, t: -q ** 2 + np.vectorize(lam.get)(t) * q,
        np.linspace(-1, 2, 241), np.array([0.0, 0.5, 1.0]), revenue=R)


def test_criterion_08_three_state_genericity(criterion):
    rng = np.random.default_rng(SEED)
    feasible = 0
    for _ in range(100):
        prefs = Quadratic(revenue=rng.uniform(0, 2),
                          worker=(rng.uniform(0.5, 2), rng.uniform(0.5, 3), rng.uniform(0, 1)),
                          firm=(rng.uniform(0.5, 2), rng.uniform(-1, 1), rng.uniform(0, 1)))
        states = tuple(np.sort(rng.choice(np.linspace(0, 1, 101), 3, replace=False)))
        params = WelfareParams(beta=rng.uniform(0.5, 3))
        feasible += check_multi_state(prefs, params, rng.uniform(0, 0.9), states).feasible
    special = check_multi_state(_common_root_prefs(), WelfareParams(beta=1), 0.0, (0.0, 0.5, 1.0))
    ok = feasible == 0 and special.feasible
    criterion(8, ok, f"{feasible}/100 random instances feasible; common-root instance feasible "
                     f"{special.feasible} at q_d={special.q_d:.6f}")


def test_criterion_09_decoupling(criterion):
    base = solve_numeric(PREFS, WelfareParams(beta=1, gamma=0.2), 0.5, UNIFORM)
    moved = solve_numeric(PREFS, WelfareParams(beta=1.7, gamma=0.35), 0.5, UNIFORM)
    d_default = max(abs(base.policy.q_d - moved.policy.q_d), abs(base.policy.c_d - moved.policy.c_d))
    pinned = solve_numeric(PREFS, WelfareParams(beta=1, gamma=0.2), 0.5, UNIFORM, fixed={"q_d": 0.4})
    d_interval = max(abs(base.policy.q_min - pinned.policy.q_min), abs(base.policy.q_max - pinned.policy.q_max))
    ok = d_default <= 1e-5 and d_interval <= 1e-5
    criterion(9, ok, f"default shift {d_default:.1e}, interval shift {d_interval:.1e} (tol 1e-5)")


def test_criterion_10_worker_control(criterion):
    params = WelfareParams(beta=1, gamma=0)
    worker = solve(PREFS, params, 1.0, UNIFORM)
    total = worker.policy.c_d + worker.policy.q_d ** 2
    p = worker.policy
    a = expected_swf(PREFS, params, p.replace(q_d=0.1, c_d=total - 0.01), UNIFORM, 1.0)
    b = expected_swf(PREFS, params, p.replace(q_d=0.4, c_d=total - 0.16), UNIFORM, 1.0)
    firm = solve(PREFS, params, 0.0, UNIFORM)
    ok = abs(a - b) <= 1e-9 and worker.expected_welfare < firm.expected_welfare
    criterion(10, ok, f"|SWF difference| {abs(a - b):.1e}; welfare {worker.expected_welfare:.6f} "
                      f"(worker power) < {firm.expected_welfare:.6f} (firm power)")


def test_criterion_11_oracle_equivalence(criterion):
    lines, ok = [], True
    for delta, params in ((0.5, WelfareParams(beta=1, gamma=0.2)), (0.0, WelfareParams(beta=1, gamma=1e-6))):
        ref = solve(PREFS, params, delta, UNIFORM).policy
        rep = grid_policy_search(PREFS, params, delta, UNIFORM, reference=ref)
        q_step = 1 / 40
        gap_q = max(abs(a - b) for a, b in zip(rep.best.as_array()[:3], ref.as_array()[:3]))
        gap_c = abs(rep.best.c_d - ref.c_d)
        ok &= gap_q <= q_step and gap_c <= q_step
        lines.append(f"delta={delta}: gaps q {gap_q:.4f}, c_d {gap_c:.4f}")
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        prefs = Quadratic(revenue=rng.uniform(0, 2),
                          worker=(rng.uniform(0.5, 2), rng.uniform(-2, 2), rng.uniform(0, 1)),
                          firm=(rng.uniform(0.5, 2), rng.uniform(-2, 2), rng.uniform(0, 1)))
        lo, mid, hi = np.sort(rng.uniform(-0.5, 1.5, 3))
        pol = Policy(lo, hi, mid, rng.uniform(-1, 1))
        delta, theta = rng.uniform(), rng.uniform()
        rep = grid_bargain(prefs, delta, pol, theta)
        out = bargain(prefs, delta, pol, theta)
        dq, dc = rep.steps
        worst = max(worst, abs(rep.best.q - out.q) / dq, abs(rep.best.c - out.c) / dc)
    ok &= worst <= 1
    criterion(11, ok, "; ".join(lines) + f" (step {1 / 40}); grid_bargain worst {worst:.2f} steps")


def test_criterion_12_nash_split_invariants(criterion):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(1000):
        prefs = Quadratic(revenue=rng.uniform(-2, 2), y_w=rng.uniform(-1, 1), y_f=rng.uniform(-1, 1),
                          worker=(rng.uniform(0.2, 3), rng.uniform(-3, 3), rng.uniform(-2, 2)),
                          firm=(rng.uniform(0.2, 3), rng.uniform(-3, 3), rng.uniform(-2, 2)))
        lo, mid, hi = np.sort(rng.uniform(-1, 2, 3))
        pol = Policy(lo, hi, mid, rng.uniform(-2, 2))
        delta, theta = rng.uniform(), rng.uniform()
        out = bargain(prefs, delta, pol, theta)
        q_eff = joint_surplus_maximizer(prefs, (lo, hi), theta)
        ir = max(-out.gain_w, -out.gain_f, 0.0)
        eff = 0.0 if out.at_default else abs(prefs.surplus(out.q, theta) - prefs.surplus(q_eff, theta))
        share = abs((1 - delta) * out.gain_w - delta * out.gain_f)
        worst = max(worst, ir, eff, share)
    criterion(12, worst <= 1e-9, f"worst violation {worst:.1e} over 1000 instances (tol 1e-9)")


def test_criterion_13_equity_efficiency_threshold(criterion):
    below = [0.0, 0.5, 1.0, 1.5, 1.9]
    above = [2.1, 2.5, 3.0, 5.0]
    table = sweep(PREFS, WelfareParams(gamma=0), 0.0, UNIFORM, "beta", below + above)
    q_min = {r.value: r.q_min for r in table.rows}
    ok = all(q_min[b] == 0 for b in below) and all(q_min[b] > 0 for b in above)
    criterion(13, ok, "q_min by beta: " + ", ".join(f"{b:g}:{q_min[b]:.4f}" for b in below + above))
