"""First-best implementation through a default contract and a delegation set.

With finitely many states the regulator can sometimes pick a default
(q_d, c_d) so that bargaining from it reproduces the welfare-maximizing
contract in every state.  This module finds such defaults, checks the
sufficient conditions that guarantee them, and verifies the resulting
reduced game has no profitable deviations.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .bargaining import firm_utility, split_transfer, worker_utility
from .welfare import first_best, swf_eval

REPLAY_TOL = 1e-7
RESIDUAL_TOL = 1e-9


def double_difference(u, q, theta, theta_p, fb):
    """Gain from moving q to the first-best quality in theta, minus the same gain in theta_p."""
    best = fb if callable(fb) else fb.__getitem__
    return (u(best(theta), theta) - u(q, theta)) - (u(best(theta_p), theta_p) - u(q, theta_p))


def default_search_box(states):
    lo, hi = min(states), max(states)
    return lo - 1.0, hi + 1.0


# ---------------------------------------------------------------- renegotiation

def renegotiate(prefs, delta, outcome, theta, allowed):
    """Bargain from ``outcome`` in state theta over the enforceable qualities.

    ``allowed`` is either an interval (lo, hi) or a finite collection tagged
    by being a set/frozenset.  Returns (q, c).
    """
    q0, c0 = outcome
    if isinstance(allowed, (set, frozenset)):
        cands = np.array(sorted(allowed))
        q = float(cands[int(np.argmax(prefs.surplus(cands, theta)))])
    else:
        q = float(prefs.surplus_argmax(theta, *allowed))
    if prefs.surplus(q, theta) <= prefs.surplus(q0, theta):
        return q0, c0
    return q, float(split_transfer(prefs, delta, q, q0, c0, theta))


def _recover_default_transfer(prefs, delta, q_d, contract):
    """c_d for which bargaining from (q_d, c_d) lands on ``contract``."""
    q, c, theta = contract.q, contract.c, contract.theta
    return (c + prefs.u_w(q, theta) - prefs.u_w(q_d, theta)
            - delta * (prefs.surplus(q, theta) - prefs.surplus(q_d, theta)))


def _pair_residual(prefs, delta, fb_hi, fb_lo):
    """Residual of the two-state default condition as a function of q_d."""
    fb = {fb_hi.theta: fb_hi.q, fb_lo.theta: fb_lo.q}

    def residual(q_d):
        dd_w = double_difference(prefs.u_w, q_d, fb_hi.theta, fb_lo.theta, fb)
        dd_f = double_difference(prefs.u_f, q_d, fb_hi.theta, fb_lo.theta, fb)
        return (1 - delta) * dd_w - delta * dd_f - (fb_lo.c - fb_hi.c)

    return residual


def _bracket_root(residual, start, box, max_doublings=60):
    """Expand [start] by doubling until the residual changes sign inside the box."""
    lo, hi = min(start), max(start)
    width = max(hi - lo, 1e-3)
    for _ in range(max_doublings):
        r_lo, r_hi = residual(lo), residual(hi)
        if r_lo == 0:
            return lo, lo
        if r_hi == 0:
            return hi, hi
        if np.sign(r_lo) != np.sign(r_hi):
            return lo, hi
        if lo <= box[0] and hi >= box[1]:
            return None
        lo, hi = max(lo - width, box[0]), min(hi + width, box[1])
        width *= 2
    return None


# ---------------------------------------------------------------- two states

@dataclass
class DDCertificate:
    feasible: bool
    q_d: float = math.nan
    c_d: float = math.nan
    residual: float = math.nan
    bracket: tuple = None
    states: tuple = ()
    first_best: list = field(default_factory=list)
    replay: list = field(default_factory=list)
    replay_error: float = math.nan
    reason: str = ""


def _solve_pair(prefs, delta, fb_lo, fb_hi, box, allowed):
    residual = _pair_residual(prefs, delta, fb_hi, fb_lo)
    bracket = _bracket_root(residual, (fb_lo.q, fb_hi.q), box)
    states = (fb_lo.theta, fb_hi.theta)
    if bracket is None:
        return DDCertificate(False, states=states, first_best=[fb_lo, fb_hi],
                             reason="default condition has no root in the search box")
    a, b = bracket
    q_d = a if a == b else optimize.bisect(residual, a, b, xtol=1e-15, rtol=1e-15, maxiter=400)
    res = residual(q_d)
    c_hi = _recover_default_transfer(prefs, delta, q_d, fb_hi)
    c_lo = _recover_default_transfer(prefs, delta, q_d, fb_lo)
    cert = DDCertificate(True, q_d, c_hi, res, (a, b), states, [fb_lo, fb_hi])
    if abs(res) > 1e-10:
        cert.feasible, cert.reason = False, "root does not zero the default condition"
    elif abs(c_hi - c_lo) > REPLAY_TOL:
        cert.feasible, cert.reason = False, "default transfer differs across states"
    replay_default(prefs, delta, cert, allowed)
    return cert


def replay_default(prefs, delta, cert, allowed):
    cert.replay = [renegotiate(prefs, delta, (cert.q_d, cert.c_d), fb.theta, allowed)
                   for fb in cert.first_best]
    cert.replay_error = max(max(abs(q - fb.q), abs(c - fb.c))
                            for (q, c), fb in zip(cert.replay, cert.first_best))
    if cert.feasible and not cert.replay_error <= REPLAY_TOL:
        cert.feasible, cert.reason = False, "bargaining from the default misses the first best"
    return cert


def solve_default_two_state(prefs, params, delta, states, box=None):
    """Default that implements the first best in both states, if one exists."""
    if params.beta <= 0 or params.gamma != 0:
        raise ValueError("two-state construction needs beta > 0 and gamma = 0")
    lo, hi = sorted(states)
    if lo == hi:
        raise ValueError("two distinct states required")
    box = box or default_search_box(states)
    fb_lo, fb_hi = first_best(prefs, params, lo), first_best(prefs, params, hi)
    return _solve_pair(prefs, delta, fb_lo, fb_hi, box, tuple(box))


# ---------------------------------------------------------------- sufficient conditions

@dataclass
class CrossPartialReport:
    holds: bool
    min_margin: float
    max_value: float


def check_cor1(prefs, delta, box, margin, n=41):
    """Does (1-delta) u_w_qtheta - delta u_f_qtheta stay beyond ``margin`` in absolute value?"""
    (q_lo, q_hi), (t_lo, t_hi) = box
    qq, tt = np.meshgrid(np.linspace(q_lo, q_hi, n), np.linspace(t_lo, t_hi, n), indexing="ij")
    cw, cf = prefs.cross_partials(qq, tt)
    expr = np.broadcast_to((1 - delta) * np.asarray(cw) - delta * np.asarray(cf), qq.shape)
    same_sign = bool(np.all(expr > 0) or np.all(expr < 0))
    min_abs = float(np.min(np.abs(expr)))
    return CrossPartialReport(same_sign and min_abs > margin, min_abs, float(np.max(expr)))


@dataclass
class DistanceTable:
    rows: list
    hypothesis_ok: bool
    monotone: bool
    warning: str = ""


def default_distance_vs_delta(prefs, params, states, deltas):
    """Distance between the implementing default and the high-state first best, per delta."""
    lo, hi = sorted(states)
    cw, cf = prefs.cross_partials(0.0, 0.5 * (lo + hi))
    b, a = float(cw), -float(cf)
    hypothesis = b > 0 and a > 0 and b > a
    rows = []
    for delta in sorted(deltas):
        cert = solve_default_two_state(prefs, params, delta, (lo, hi))
        q_hi = cert.first_best[1].q
        rows.append((delta, cert.q_d, abs(cert.q_d - q_hi) if cert.feasible else math.nan))
    dists = [r[2] for r in rows]
    monotone = all(x < y for x, y in zip(dists, dists[1:]))
    warning = "" if hypothesis else f"hypothesis b > a > 0 violated (b={b:.6g}, a={a:.6g})"
    return DistanceTable(rows, hypothesis, monotone, warning)


@dataclass
class GammaReport:
    holds: bool
    worst_pair: tuple = None
    worst_slack: float = math.inf


def check_gamma_condition(prefs, fb, tol=1e-12):
    """Each state's first-best quality must beat every other state's in joint surplus."""
    worst = GammaReport(True)
    for t in fb:
        for tp in fb:
            if t == tp:
                continue
            slack = float(prefs.surplus(fb[t], t) - prefs.surplus(fb[tp], t))
            if slack < worst.worst_slack:
                worst = GammaReport(slack >= -tol, (t, tp), slack)
    return worst


# ---------------------------------------------------------------- reduced game

@dataclass
class ReducedGame:
    """Outcome table indexed by (worker report, firm report) over ``states``."""

    states: tuple
    outcomes: dict
    allowed: object = None


def two_state_game(cert, allowed=None):
    lo, hi = cert.first_best
    d = (cert.q_d, cert.c_d)
    outcomes = {(0, 0): (lo.q, lo.c), (1, 1): (hi.q, hi.c), (0, 1): d, (1, 0): d}
    return ReducedGame(cert.states, outcomes, allowed or default_search_box(cert.states))


@dataclass
class DeviationReport:
    equilibrium: bool
    residuals: list
    binding: list


def verify_no_deviation(game, prefs, delta, states=None, tol=RESIDUAL_TOL):
    """Check unilateral report deviations in every true state, after renegotiation."""
    states = tuple(states or game.states)
    allowed = game.allowed or default_search_box(game.states)
    n = len(game.states)
    residuals = []
    for i, theta in enumerate(states):
        idx = game.states.index(theta)

        def settle(cell):
            return renegotiate(prefs, delta, game.outcomes[cell], theta, allowed)

        q, c = settle((idx, idx))
        truth_w, truth_f = worker_utility(prefs, q, c, theta), firm_utility(prefs, q, c, theta)
        for j in range(n):
            if j == idx:
                continue
            qw, cw = settle((j, idx))
            qf, cf = settle((idx, j))
            residuals.append({"state": theta, "agent": "worker", "report": game.states[j],
                              "residual": float(truth_w - worker_utility(prefs, qw, cw, theta))})
            residuals.append({"state": theta, "agent": "firm", "report": game.states[j],
                              "residual": float(truth_f - firm_utility(prefs, qf, cf, theta))})
    equilibrium = all(r["residual"] >= -tol for r in residuals)
    binding = [r for r in residuals if abs(r["residual"]) <= tol]
    return DeviationReport(equilibrium, residuals, binding)


# ---------------------------------------------------------------- many states

@dataclass
class MultiStateReport:
    feasible: bool
    q_d: float
    c_d: float
    gaps: dict
    worst_pair: tuple
    worst_gap: float
    transfer_spread: float
    gamma: GammaReport = None
    certificate: DDCertificate = None
    reason: str = ""


def check_multi_state(prefs, params, delta, states, box=None):
    """Can one default implement the first best in every state?

    The default quality is pinned by the two highest states; every other
    pair of states is then checked against it and the largest gap reported.
    """
    states = tuple(sorted(states))
    box = box or default_search_box(states)
    fbs = [first_best(prefs, params, t) for t in states]
    gamma = None
    allowed = tuple(box)
    if params.gamma > 0:
        fb_map = {fb.theta: fb.q for fb in fbs}
        gamma = check_gamma_condition(prefs, fb_map)
        allowed = frozenset(fb_map.values())
    cert = _solve_pair(prefs, delta, fbs[-2], fbs[-1], box, allowed)
    if isinstance(allowed, frozenset) and np.isfinite(cert.q_d):
        allowed = allowed | {cert.q_d}
        replay_default(prefs, delta, cert, allowed)
    if not np.isfinite(cert.q_d):
        return MultiStateReport(False, math.nan, math.nan, {}, (states[-1], states[-2]), math.inf,
                                math.inf, gamma, cert, cert.reason)
    gaps = {}
    for i in range(len(states)):
        for j in range(i):
            gaps[(states[i], states[j])] = float(_pair_residual(prefs, delta, fbs[i], fbs[j])(cert.q_d))
    worst_pair = max(gaps, key=lambda k: abs(gaps[k]))
    worst = abs(gaps[worst_pair])
    transfers = [_recover_default_transfer(prefs, delta, cert.q_d, fb) for fb in fbs]
    spread = max(transfers) - min(transfers)
    replay = [renegotiate(prefs, delta, (cert.q_d, cert.c_d), fb.theta, allowed) for fb in fbs]
    replay_err = max(max(abs(q - fb.q), abs(c - fb.c)) for (q, c), fb in zip(replay, fbs))
    cert.first_best, cert.replay, cert.replay_error = fbs, replay, replay_err
    reasons = []
    if worst > REPLAY_TOL:
        reasons.append(f"pair {worst_pair} misses the default condition by {worst:.3g}")
    if spread > REPLAY_TOL:
        reasons.append(f"default transfer varies by {spread:.3g} across states")
    if replay_err > REPLAY_TOL:
        reasons.append("bargaining replay misses the first best")
    if gamma is not None and not gamma.holds:
        reasons.append(f"surplus ranking fails for {gamma.worst_pair}")
    feasible = not reasons and cert.reason == ""
    cert.feasible = feasible
    return MultiStateReport(feasible, cert.q_d, cert.c_d, gaps, worst_pair, worst, spread, gamma,
                            cert, "; ".join(reasons) or cert.reason)


# ---------------------------------------------------------------- max-min

@dataclass
class MaxMinReport:
    theta_k: float
    partition: tuple
    game: ReducedGame
    certificate: dict
    deviation: DeviationReport
    first_best_k: object
    replay_k: tuple
    feasible: bool


def worst_state(prefs, params, states, tol=1e-12):
    """State with the lowest first-best welfare; ties go to the largest state."""
    vals = [swf_eval(prefs, params, first_best(prefs, params, t)).total for t in states]
    low = min(vals)
    return max(t for t, v in zip(states, vals) if v <= low + tol * (1 + abs(low)))


def maxmin_construct(prefs, params, delta, states):
    """Implement the first best in the worst-welfare state; pool the others."""
    states = tuple(sorted(states))
    theta_k = worst_state(prefs, params, states)
    rest = tuple(t for t in states if t != theta_k)
    partition = (rest, (theta_k,))
    fb_k = first_best(prefs, params, theta_k)

    if len(states) == 2:
        cert = solve_default_two_state(prefs, params, delta, states)
        game = two_state_game(cert)
        dev = verify_no_deviation(game, prefs, delta)
        k = states.index(theta_k)
        return MaxMinReport(theta_k, partition, game,
                            {"q_d": cert.q_d, "c_d": cert.c_d, "residual": cert.residual},
                            dev, fb_k, cert.replay[k], cert.feasible and dev.equilibrium)

    fb_rest = [first_best(prefs, params, t) for t in rest]

    def gain(u, q, q_d, theta):
        return u(q, theta) - u(q_d, theta)

    def equations(x):
        q_r, c_r, q_d, c_d = x
        out = []
        for t in rest:
            lhs = ((1 - delta) * (gain(prefs.u_w, fb_k.q, q_d, theta_k) - gain(prefs.u_w, q_r, q_d, t))
                   - delta * (gain(prefs.u_f, fb_k.q, q_d, theta_k) - gain(prefs.u_f, q_r, q_d, t)))
            out.append(lhs - (c_r - fb_k.c))
        out.append(c_d - _recover_default_transfer(prefs, delta, q_d, fb_k))
        return np.array(out)

    q0 = float(np.mean([fb.q for fb in fb_rest]))
    c0 = float(np.mean([fb.c for fb in fb_rest]))
    sol = optimize.least_squares(equations, [q0, c0, q0, c0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    q_r, c_r, q_d, c_d = (float(v) for v in sol.x)
    resid = float(np.max(np.abs(equations(sol.x))))

    allowed = frozenset({q_r, fb_k.q, q_d})
    k = states.index(theta_k)
    outcomes = {}
    for i in range(len(states)):
        for j in range(len(states)):
            if i == k and j == k:
                outcomes[(i, j)] = (fb_k.q, fb_k.c)
            elif i != k and j != k:
                outcomes[(i, j)] = (q_r, c_r)
            else:
                outcomes[(i, j)] = (q_d, c_d)
    game = ReducedGame(states, outcomes, allowed)
    dev = verify_no_deviation(game, prefs, delta)
    replay_k = renegotiate(prefs, delta, (q_d, c_d), theta_k, allowed)
    hit = max(abs(replay_k[0] - fb_k.q), abs(replay_k[1] - fb_k.c)) <= REPLAY_TOL
    cert = {"q_d": q_d, "c_d": c_d, "q_rest": q_r, "c_rest": c_r, "residual": resid}
    return MaxMinReport(theta_k, partition, game, cert, dev, fb_k, replay_k,
                        dev.equilibrium and hit and resid <= 1e-9)
