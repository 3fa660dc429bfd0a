"""Optimal regulation: delegation interval and default contract maximizing expected welfare."""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize

from .bargaining import transfer_closed_form
from .domain import Power, Quadratic, Policy, prior_moments, validate_policy
from .welfare import (
    INEQUITY_SCALE,
    analytic_focs,
    efficient_quality,
    equity_gap,
    expected_swf,
    optimal_default_transfer,
)

SEED = 20240611
BRANCHES = ("ClosedForm_delta0", "ClosedForm_aligned", "ClosedForm_delta1", "Numeric")
FLAT_TOL = 1e-12


class SolverError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class SolveReport:
    policy: Policy
    expected_welfare: float
    branch: str
    foc_residuals: tuple
    notes: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    converged: bool = True
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------- shared pieces

def _closed_form_ok(prefs, params):
    return isinstance(prefs, Quadratic) and prefs.standard and params.linear_externality


def _quality_range(prefs, prior):
    """Unconstrained bargained qualities at the two ends of the support."""
    lo, hi = prior.support()
    a, b = sorted(float(prefs.surplus_argmax(t)) for t in (lo, hi))
    return a, b


def profile_policy(prefs, params, prior, delta, q_min, q_max, q_d):
    """Policy with c_d set to its welfare-maximizing value."""
    pol = Policy(q_min, q_max, q_d, 0.0)
    return pol.replace(c_d=optimal_default_transfer(prefs, params, pol, prior, delta))


def foc_residuals(prefs, params, delta, prior, policy, h=1e-6):
    """Partials of expected welfare in (q_min, q_max, c_d, q_d)."""
    if isinstance(prefs, Quadratic):
        return analytic_focs(prefs, params, policy, prior, delta)
    base = policy.as_array()
    out = []
    for i in (0, 1, 3, 2):
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] -= h
        out.append((expected_swf(prefs, params, Policy(*up), prior, delta)
                    - expected_swf(prefs, params, Policy(*dn), prior, delta)) / (2 * h))
    return np.array(out)


def _report(prefs, params, prior, delta, policy, branch, **kw):
    problems = validate_policy(policy)
    if problems:
        raise SolverError("solver produced an invalid policy", {"violations": problems})
    welfare = expected_swf(prefs, params, policy, prior, delta)
    res = foc_residuals(prefs, params, delta, prior, policy)
    return SolveReport(policy, float(welfare), branch, tuple(float(r) for r in res), **kw)


def _maximize_end(deriv, value, lo, hi, n=41):
    """Maximize a smooth 1-D function on [lo, hi] given its derivative.

    Sign changes of the derivative on a grid are polished with brentq and
    compared against the end points.  The grid is refined geometrically
    next to both ends so roots hugging an end are not skipped.  Ties keep
    the earlier candidate.
    """
    if hi - lo <= 1e-15:
        return lo
    near = (hi - lo) * np.logspace(-6, -2, 5)
    xs = np.unique(np.concatenate([np.linspace(lo, hi, n), lo + near, hi - near]))
    ds = [deriv(x) for x in xs]
    cands = [lo, hi]
    for x0, x1, d0, d1 in zip(xs, xs[1:], ds, ds[1:]):
        if d0 > 0 >= d1:
            cands.append(x1 if d1 == 0 else optimize.brentq(deriv, x0, x1, xtol=1e-15, rtol=1e-15))
    vals = [value(x) for x in cands]
    best = max(vals)
    return next(c for c, v in zip(cands, vals) if v >= best - FLAT_TOL * (1 + abs(best)))


def _efficient_interval_min(prefs, params, prior, delta, policy):
    """Minimum quality ignoring the default (the equity term must not depend on it)."""
    m_lo, m_hi = _quality_range(prefs, prior)
    upper = max(m_hi, float(efficient_quality(prefs, params, prior.support()[1]))) + 1.0

    def probe(x):
        # keep the probe feasible: the default rides up with the minimum
        return policy.replace(q_min=x, q_max=max(x, policy.q_max), q_d=max(x, policy.q_d))

    def deriv(x):
        return analytic_focs(prefs, params, probe(x), prior, delta)[0]

    def value(x):
        return expected_swf(prefs, params, probe(x), prior, delta)

    return _maximize_end(deriv, value, m_lo, upper, n=81)


# ---------------------------------------------------------------- aligned bargaining

def solve_aligned(prefs, params, prior):
    """Closed form when the worker's bargaining weight equals the target share."""
    delta = params.alpha
    if not _closed_form_ok(prefs, params):
        return _fallback(prefs, params, delta, prior, "closed form needs standard quadratic preferences")
    mom = prior_moments(prior)
    if mom.degenerate:
        return _fallback(prefs, params, delta, prior, "degenerate prior: moment formula undefined")
    a = params.alpha
    q_d = 0.5 * (mom.mu3 - mom.mu1 * mom.mu2) / mom.variance
    c_d = (a * (prefs.revenue + prefs.y_f) - (1 - a) * prefs.y_w + (1 - 2 * a) * q_d ** 2
           - 2 * (1 - a) * q_d * mom.mu1 + (1 - a) * mom.mu2)
    m_lo, m_hi = _quality_range(prefs, prior)
    q_min = _efficient_interval_min(prefs, params, prior, delta, Policy(m_lo, m_hi, q_d, c_d))
    if q_min > q_d + 1e-9:
        return _fallback(prefs, params, delta, prior, "minimum exceeds the moment-formula default")
    q_min = min(q_min, q_d)
    q_max = max(m_hi, q_d)
    return _report(prefs, params, prior, delta, Policy(q_min, q_max, q_d, c_d),
                   "ClosedForm_aligned", flags={"q_max_nonbinding": True})


# ---------------------------------------------------------------- firm control

def firm_control_default_quality(q_min, q_max):
    """Welfare-maximizing default quality at delta = 0 for a uniform prior."""
    return (1 + 2 * q_max - 8 * (1 - q_max) * q_max ** 3 + 8 * (1 - q_min) * q_min ** 3) / 4


def _unconstrained_firm_default(prefs, mom):
    q_d = 0.375 * (mom.mu3 - mom.mu1 * mom.mu2) / mom.variance
    c_d = (prefs.revenue + prefs.y_f - prefs.y_w) / 2 + q_d ** 2 - 2 * q_d * mom.mu1 + 0.75 * mom.mu2
    return q_d, c_d


def solve_firm_control(prefs, params, prior, damping=0.5, max_iter=200, tol=1e-10):
    """The firm holds all bargaining power (delta = 0), uniform prior."""
    delta = 0.0
    uniform = isinstance(prior, Power) and prior.k == 1
    if not (_closed_form_ok(prefs, params) and uniform and params.alpha == 0.5):
        return _fallback(prefs, params, delta, prior,
                         "closed form needs standard preferences, alpha = 1/2 and a uniform prior")
    mom = prior_moments(prior)
    m_lo, m_hi = _quality_range(prefs, prior)
    if params.beta == 0:
        q_min = _efficient_interval_min(prefs, params, prior, delta, Policy(m_lo, m_hi, m_lo, 0.0))
        q_d = min(max(firm_control_default_quality(q_min, m_hi), q_min), m_hi)
        pol = profile_policy(prefs, params, prior, delta, q_min, m_hi, q_d)
        return _report(prefs, params, prior, delta, pol, "ClosedForm_delta0",
                       flags={"q_max_nonbinding": True, "c_d_unpinned": True, "q_d_unpinned": True},
                       notes=["beta = 0: default chosen as the beta -> 0+ limit"])
    if params.gamma == 0 and params.beta < 2:
        q_d, c_d = _unconstrained_firm_default(prefs, mom)
        return _report(prefs, params, prior, delta, Policy(m_lo, m_hi, q_d, c_d), "ClosedForm_delta0",
                       flags={"q_max_nonbinding": True})

    lo, hi = m_lo, m_hi
    converged = False
    for it in range(max_iter):
        q_d = min(max(firm_control_default_quality(lo, hi), lo), hi)
        pol = profile_policy(prefs, params, prior, delta, lo, hi, q_d)
        new_lo = _maximize_end(
            lambda x: analytic_focs(prefs, params, pol.replace(q_min=x), prior, delta)[0],
            lambda x: expected_swf(prefs, params, pol.replace(q_min=x), prior, delta),
            min(m_lo, q_d), q_d, n=21)
        new_hi = _maximize_end(
            lambda x: analytic_focs(prefs, params, pol.replace(q_max=x), prior, delta)[1],
            lambda x: expected_swf(prefs, params, pol.replace(q_max=x), prior, delta),
            q_d, m_hi, n=21)
        step = max(abs(new_lo - lo), abs(new_hi - hi))
        lo += damping * (new_lo - lo)
        hi += damping * (new_hi - hi)
        if step < tol:
            converged = True
            break
    if not converged:
        rep = solve_numeric(prefs, params, delta, prior)
        rep.notes.append(f"fixed point did not converge in {max_iter} iterations")
        rep.flags["fixed_point_failed"] = True
        return rep
    q_d = min(max(firm_control_default_quality(lo, hi), lo), hi)
    pol = profile_policy(prefs, params, prior, delta, lo, hi, q_d)
    return _report(prefs, params, prior, delta, pol, "ClosedForm_delta0",
                   flags={"q_max_nonbinding": hi >= m_hi}, extras={"iterations": it + 1})


def _reduced_end_root(prefs, params, q_d, c_d, which):
    """Nontrivial root in d of the end condition for a uniform prior at delta = 0.

    For the minimum, d = 2*q_min and the binding region is [0, d]; for the
    maximum, d = 1 - 2*q_max and the region is [1 - d, 1].  The condition is
    averaged over the oriented region and divided by d, which continues it
    smoothly through d = 0.  Needs gamma = 0.
    """
    if params.gamma != 0:
        raise ValueError("end sensitivities are defined for gamma = 0")
    x, w = np.polynomial.legendre.leggauss(32)

    def reduced(d):
        d = d if abs(d) > 1e-12 else 1e-12
        if which == "min":
            q_end, a, b = d / 2, 0.0, d
        else:
            q_end, a, b = (1 - d) / 2, 1 - d, 1.0
        theta = 0.5 * (a + b) + 0.5 * (b - a) * x
        c = transfer_closed_form(0.0, q_end, q_d, c_d, theta)
        u_w = prefs.y_w + prefs.u_w(q_end, theta) + c
        u_f = prefs.y_f + prefs.revenue + prefs.u_f(q_end, theta) - c
        ds = prefs.dsurplus(q_end, theta)
        gap = equity_gap(params, u_w, u_f)
        integrand = ds + params.gamma - 2 * INEQUITY_SCALE * params.beta * gap * params.alpha * ds
        # mean over the oriented region; it carries one more factor of d
        return 0.5 * float(np.dot(w, integrand)) / d

    return optimize.brentq(reduced, -2.0, 2.0 + 1e-3, xtol=1e-15)


def firm_control_end_sensitivities(prefs, params, q_d=0.375, h=1e-5):
    """d(2 q_min)/dq_d and d(1 - 2 q_max)/dq_d at delta = 0, uniform prior.

    Each end condition is solved for its nontrivial root with c_d tied to
    q_d by the interior transfer formula, then differenced centrally.
    """
    mom = prior_moments(Power(1))

    def roots(qd):
        c_d = (prefs.revenue + prefs.y_f - prefs.y_w) / 2 + qd ** 2 - 2 * qd * mom.mu1 + 0.75 * mom.mu2
        return (_reduced_end_root(prefs, params, qd, c_d, "min"),
                _reduced_end_root(prefs, params, qd, c_d, "max"))

    (lo_p, hi_p), (lo_m, hi_m) = roots(q_d + h), roots(q_d - h)
    return (lo_p - lo_m) / (2 * h), (hi_p - hi_m) / (2 * h)


# ---------------------------------------------------------------- worker control

def solve_worker_control(prefs, params, prior):
    """The worker holds all bargaining power (delta = 1).

    The firm is held to its default value, so only F_d = -c_d - q_d^2 is
    pinned down; the report returns the interval midpoint as a representative
    default quality.
    """
    delta = 1.0
    if not _closed_form_ok(prefs, params):
        return _fallback(prefs, params, delta, prior, "closed form needs standard quadratic preferences")
    m_lo, m_hi = _quality_range(prefs, prior)

    def prof(lo, hi):
        return profile_policy(prefs, params, prior, delta, lo, hi, 0.5 * (lo + hi))

    def v(lo, hi):
        return expected_swf(prefs, params, prof(lo, hi), prior, delta)

    q_min = _maximize_end(lambda x: analytic_focs(prefs, params, prof(x, m_hi), prior, delta)[0],
                          lambda x: v(x, m_hi), m_lo, m_hi)
    notes, q_max = [], m_hi
    alt = _maximize_end(lambda x: analytic_focs(prefs, params, prof(q_min, x), prior, delta)[1],
                        lambda x: v(q_min, x), q_min, m_hi)
    if v(q_min, alt) > v(q_min, m_hi) + FLAT_TOL:
        q_max = alt
        notes.append("maximum quality binds at delta = 1")
    pol = prof(q_min, q_max)
    f_d = -pol.c_d - pol.q_d ** 2
    notes.append("default indeterminate: any q_d in the interval with c_d + q_d^2 = "
                 f"{-f_d:.12g} is optimal")
    extras = {
        "firm_default_value": f_d,
        "default_cost_sum": -f_d,
        "firm_utility": prefs.revenue + prefs.y_f + f_d,
        "firm_utility_minus_half_revenue": prefs.revenue / 2 + prefs.y_f + f_d,
    }
    return _report(prefs, params, prior, delta, pol, "ClosedForm_delta1", notes=notes,
                   flags={"default_indeterminate": True, "q_max_nonbinding": q_max >= m_hi},
                   extras=extras)


# ---------------------------------------------------------------- numeric

_COORDS = ("q_min", "q_max", "q_d")


def solve_numeric(prefs, params, delta, prior, fixed=None, box=None, n_starts=16, seed=SEED):
    """Multi-start maximization of expected welfare over the policy.

    c_d enters welfare only through the squared equity gap, so unless it is
    fixed it is set to its optimal value for every candidate
    (q_min, q_max, q_d).  ``fixed`` pins any of the four coordinates.
    """
    fixed = dict(fixed or {})
    unknown = set(fixed) - {*_COORDS, "c_d"}
    if unknown:
        raise ValueError(f"unknown fixed coordinates: {sorted(unknown)}")
    lo, hi = box or prior.support()
    free = [k for k in _COORDS if k not in fixed]
    m_lo, m_hi = _quality_range(prefs, prior)
    c_box = prefs.revenue / 2 + np.array([-2.0, 2.0]) * max(abs(prefs.revenue), 1.0)

    def assemble(x):
        vals = dict(fixed)
        vals.update(zip(free, x))
        return vals

    def make_policy(vals):
        q_min, q_max, q_d = (min(max(vals[k], lo), hi) for k in _COORDS)
        q_min, q_max = min(q_min, q_d), max(q_max, q_d)
        if "c_d" in fixed:
            return Policy(q_min, q_max, q_d, fixed["c_d"])
        return profile_policy(prefs, params, prior, delta, q_min, q_max, q_d)

    def violation(vals):
        q_min, q_max, q_d = (vals[k] for k in _COORDS)
        return (max(0, q_min - q_d) + max(0, q_d - q_max)
                + sum(max(0, lo - vals[k]) + max(0, vals[k] - hi) for k in _COORDS))

    def objective(x):
        vals = assemble(x)
        return -expected_swf(prefs, params, make_policy(vals), prior, delta) + 10.0 * violation(vals) ** 2

    def gradient(x):
        pol = make_policy(assemble(x))
        g = foc_residuals(prefs, params, delta, prior, pol)
        full = {"q_min": g[0], "q_max": g[1], "q_d": g[3]}
        return -np.array([full[k] for k in free])

    notes, flags = [], {}
    if free:
        rng = np.random.default_rng(seed)
        best = None
        for _ in range(n_starts):
            draw = dict(zip(_COORDS, np.sort(rng.uniform(lo, hi, 3))))
            x0 = np.array([draw[k] for k in free])
            res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 4000})
            if not np.isfinite(res.fun):
                continue
            key = (res.fun, tuple(res.x))
            if best is None or key < best[0]:
                best = (key, res.x)
        if best is None:
            raise SolverError("no start produced a finite objective", {"box": [lo, hi]})
        start = make_policy(assemble(best[1]))
        vals = {k: getattr(start, k) if k in free else fixed[k] for k in _COORDS}
        vals = _coordinate_refine(objective, free, vals, lo, hi)
        x = np.array([vals[k] for k in free])
        if isinstance(prefs, Quadratic):
            x = _slsqp_polish(objective, gradient, free, fixed, x, lo, hi)
        vals = assemble(x)
    else:
        vals = dict(fixed)

    def rebuild(p):
        return make_policy({"q_min": p.q_min, "q_max": p.q_max, "q_d": p.q_d})

    pol = make_policy(vals)
    pol, canon = _canonicalize(prefs, params, prior, delta, pol, fixed, m_lo, m_hi, rebuild)
    if params.beta == 0 and "c_d" not in fixed:
        if "q_d" not in fixed:
            pol = _least_unequal_default(prefs, params, prior, delta, pol)
            pol, canon = _canonicalize(prefs, params, prior, delta, pol, fixed, m_lo, m_hi, rebuild)
        flags["c_d_unpinned"] = True
        flags["q_d_unpinned"] = True
        notes.append("beta = 0: welfare is flat in the default; reported default is the beta -> 0+ limit")
    flags.update(canon)
    if not c_box[0] <= pol.c_d <= c_box[1]:
        notes.append(f"c_d outside the search box [{c_box[0]:.6g}, {c_box[1]:.6g}]")
    return _report(prefs, params, prior, delta, pol, "Numeric", notes=notes, flags=flags)


def _coordinate_refine(objective, free, vals, lo, hi, sweeps=3):
    vals = dict(vals)
    for _ in range(sweeps):
        for k in free:
            a, b = lo, hi
            if k == "q_min":
                b = vals["q_d"]
            elif k == "q_max":
                a = vals["q_d"]
            else:
                a, b = vals["q_min"], vals["q_max"]
            if b - a < 1e-14:
                continue

            def fk(v, k=k):
                trial = dict(vals, **{k: v})
                return objective(np.array([trial[j] for j in free]))

            res = optimize.minimize_scalar(fk, bounds=(a, b), method="bounded",
                                           options={"xatol": 1e-12})
            if res.fun <= fk(vals[k]):
                vals[k] = float(res.x)
    return vals


def _slsqp_polish(objective, gradient, free, fixed, x, lo, hi):
    idx = {k: i for i, k in enumerate(free)}

    def coord(z, k):
        return z[idx[k]] if k in idx else fixed[k]

    cons = [{"type": "ineq", "fun": lambda z: coord(z, "q_d") - coord(z, "q_min")},
            {"type": "ineq", "fun": lambda z: coord(z, "q_max") - coord(z, "q_d")}]
    res = optimize.minimize(objective, x, jac=gradient, method="SLSQP",
                            bounds=[(lo, hi)] * len(free), constraints=cons,
                            options={"ftol": 1e-15, "maxiter": 200})
    if res.success and res.fun <= objective(x):
        return res.x
    return x


def _canonicalize(prefs, params, prior, delta, pol, fixed, m_lo, m_hi, rebuild):
    """Move interval ends through flat directions to the unconstrained extremes."""
    flags = {}
    base = expected_swf(prefs, params, pol, prior, delta)
    tol = 1e-10 * (1 + abs(base))
    if "q_max" not in fixed:
        trial = rebuild(pol.replace(q_max=max(m_hi, pol.q_d)))
        if expected_swf(prefs, params, trial, prior, delta) >= base - tol:
            pol, flags["q_max_nonbinding"] = trial, True
    if "q_min" not in fixed:
        trial = rebuild(pol.replace(q_min=min(m_lo, pol.q_d)))
        if expected_swf(prefs, params, trial, prior, delta) >= base - tol:
            pol, flags["q_min_nonbinding"] = trial, True
    return pol, flags


def _least_unequal_default(prefs, params, prior, delta, pol):
    """Default quality minimizing the variance of the equity gap (beta -> 0+ limit)."""
    probe = replace(params, beta=1.0)

    def value(q_d):
        p = profile_policy(prefs, probe, prior, delta, pol.q_min, pol.q_max, q_d)
        return expected_swf(prefs, probe, p, prior, delta)

    q_d = pol.q_d
    if pol.q_max - pol.q_min > 1e-14:
        q_d = float(optimize.minimize_scalar(lambda x: -value(x), bounds=(pol.q_min, pol.q_max),
                                             method="bounded", options={"xatol": 1e-12}).x)
    return profile_policy(prefs, params, prior, delta, pol.q_min, pol.q_max, q_d)


def _fallback(prefs, params, delta, prior, reason):
    rep = solve_numeric(prefs, params, delta, prior)
    rep.notes.insert(0, f"numeric fallback: {reason}")
    rep.flags["fallback"] = True
    return rep


def solve(prefs, params, delta, prior, seed=SEED):
    """Route to the closed-form branch matching delta, else the numeric solver."""
    if not 0 <= delta <= 1:
        raise ValueError("delta out of range")
    if delta == params.alpha:
        return solve_aligned(prefs, params, prior)
    if delta == 0:
        return solve_firm_control(prefs, params, prior)
    if delta == 1:
        return solve_worker_control(prefs, params, prior)
    return solve_numeric(prefs, params, delta, prior, seed=seed)


# ---------------------------------------------------------------- backward bias

@dataclass
class BackwardBiasReport:
    theta: np.ndarray
    T: np.ndarray
    T_second: np.ndarray
    convex: bool
    flagged: list


def _welfare_poly(prefs, params, delta, q_d, c_d, theta):
    """Per-state welfare as a polynomial in the bargained quality."""
    kw, mw, nw = prefs.worker
    kf, mf, nf = prefs.firm
    s = Polynomial([prefs.revenue + prefs.y_w + prefs.y_f - (nw + nf) * theta ** 2,
                    (mw + mf) * theta, -(kw + kf)])
    s_d = s(q_d)
    u_w = prefs.y_w + prefs.u_w(q_d, theta) + c_d + delta * (s - s_d)
    gap = params.alpha * s - u_w
    return s - INEQUITY_SCALE * params.beta * gap ** 2 + params.gamma * Polynomial([0, 1])


def welfare_optimal_quality(prefs, params, delta, default, theta):
    """Quality maximizing welfare in state theta when the transfer is bargained from the default."""
    q_d, c_d = default
    if params.beta == 0 or params.alpha == delta:
        return float(efficient_quality(prefs, params, theta))
    poly = _welfare_poly(prefs, params, delta, q_d, c_d, theta)
    roots = poly.deriv().roots()
    real = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
    if real.size == 0:
        raise ArithmeticError("no stationary quality")
    return float(real[np.argmax(poly(real))])


def backward_bias_check(prefs, params, delta, prior, default, n_samples=50, h=1e-3):
    """Sample T(theta) = G(theta) m(theta) - int_{lo}^{theta} q*(z) dG(z) and its curvature.

    m is the agents' unconstrained quality and q* the welfare-optimal quality
    under bargaining from the default.  Interval delegation is supported
    when T is convex.
    """
    if not (isinstance(prefs, Quadratic) and params.linear_externality):
        raise ValueError("backward bias check needs quadratic preferences and a linear externality")
    lo, hi = prior.support()
    failed = set()

    def q_star(z):
        out = np.empty_like(z)
        for i, t in enumerate(np.atleast_1d(z)):
            try:
                out.flat[i] = welfare_optimal_quality(prefs, params, delta, default, t)
            except ArithmeticError:
                failed.add(float(t))
                out.flat[i] = math.nan
        return out

    def T(t):
        return float(prior.cdf(t)) * float(prefs.surplus_argmax(t)) - prior.expect(q_star, upper=t)

    thetas = np.linspace(lo + 10 * h, hi - 10 * h, n_samples)
    t_vals, second, flagged = [], [], []
    for t in thetas:
        failed.clear()
        mid, up, dn = T(t), T(t + h), T(t - h)
        t_vals.append(mid)
        second.append((up - 2 * mid + dn) / h ** 2)
        if failed or not np.isfinite(second[-1]):
            flagged.append(float(t))
    second = np.array(second)
    ok = np.isfinite(second)
    return BackwardBiasReport(thetas, np.array(t_vals), second, bool(np.all(second[ok] > 0)), flagged)
