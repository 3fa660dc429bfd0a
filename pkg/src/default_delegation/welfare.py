"""Social welfare evaluation, first-best contracts and expected welfare."""

import math
from dataclasses import dataclass

import numpy as np

from .bargaining import bargain_arrays, firm_utility, worker_utility
from .domain import Contract, Quadratic

# (alpha*U_f - (1-alpha)*U_w)^2 is scaled by this so that alpha = 1/2 gives (U_f - U_w)^2
INEQUITY_SCALE = 4.0


@dataclass(frozen=True)
class WelfareBreakdown:
    efficiency: float
    inequity: float
    externality: float
    total: float


def equity_gap(params, u_w, u_f):
    return params.alpha * u_f - (1 - params.alpha) * u_w


def swf_values(prefs, params, q, c, theta):
    """Vectorized SWF total for contracts (q, c) in states theta."""
    u_w = worker_utility(prefs, q, c, theta)
    u_f = firm_utility(prefs, q, c, theta)
    gap = equity_gap(params, u_w, u_f)
    return u_w + u_f - params.beta * INEQUITY_SCALE * gap * gap + params.gamma * params.u_r(q)


def swf_eval(prefs, params, contract):
    q, c, theta = contract.q, contract.c, contract.theta
    u_w = worker_utility(prefs, q, c, theta)
    u_f = firm_utility(prefs, q, c, theta)
    efficiency = float(u_w + u_f)
    inequity = float(INEQUITY_SCALE * equity_gap(params, u_w, u_f) ** 2)
    externality = float(params.u_r(q))
    total = efficiency - params.beta * inequity + params.gamma * externality
    return WelfareBreakdown(efficiency, inequity, externality, total)


def efficient_quality(prefs, params, theta):
    """argmax over q of joint surplus plus gamma times the externality."""
    if isinstance(prefs, Quadratic):
        k, m = prefs.surplus_curvature, prefs.worker[1] + prefs.firm[1]
        if params.linear_externality:
            return (m * theta + params.gamma) / k
        # piecewise concave quadratic: check each linear piece of the externality
        knots = np.asarray(params.externality[0])
        edges = np.concatenate([[-np.inf], knots, [np.inf]])
        cands = list(knots)
        for lo, hi in zip(edges, edges[1:]):
            mid = 0.5 * (lo + hi) if np.isfinite(lo + hi) else (hi - 1 if np.isfinite(hi) else lo + 1)
            slope = float(params.du_r(mid))
            cands.append(float(np.clip((m * theta + params.gamma * slope) / k, lo, hi)))
        cands = np.array(sorted(cands))
    else:
        cands = np.asarray(prefs.q_grid)
    vals = prefs.surplus(cands, theta) + params.gamma * params.u_r(cands)
    return float(cands[int(np.argmax(vals))])


def first_best(prefs, params, theta):
    """Per-state welfare-maximizing contract.

    The transfer sets alpha*U_f = (1 - alpha)*U_w.  With beta = 0 every
    transfer is first-best, so c is NaN and the contract is flagged.
    """
    q = efficient_quality(prefs, params, theta)
    if params.beta == 0:
        return Contract(q, math.nan, float(theta), indeterminate=True)
    a = params.alpha
    c = (a * (prefs.y_f + prefs.revenue + prefs.u_f(q, theta))
         - (1 - a) * (prefs.y_w + prefs.u_w(q, theta)))
    return Contract(float(q), float(c), float(theta))


def _breakpoints(prefs, params, policy):
    """States where the bargained quality hits an interval end or an externality knot."""
    if not isinstance(prefs, Quadratic) or prefs.surplus_slope == 0:
        return ()
    knots = [policy.q_min, policy.q_max]
    if not params.linear_externality:
        knots += list(params.externality[0])
    return tuple(k / prefs.surplus_slope for k in knots)


def _panel_breaks(prior, prefs):
    # generic preferences: split the support into many panels
    if isinstance(prefs, Quadratic):
        return ()
    lo, hi = prior.support()
    return tuple(np.linspace(lo, hi, 201)[1:-1])


def expected_swf(prefs, params, policy, prior, delta):
    def integrand(theta):
        q, c = bargain_arrays(prefs, delta, policy, theta)
        return swf_values(prefs, params, q, c, theta)

    breaks = _breakpoints(prefs, params, policy) + _panel_breaks(prior, prefs)
    return prior.expect(integrand, breaks)


# ---------------------------------------------------------------- profiled objective
#
# The equity gap is affine in c_d with slope -1, so for a fixed interval and
# default quality the best c_d equals the mean gap evaluated at c_d = 0.  The
# helpers below work with that decomposition.

def equity_gaps(prefs, params, policy, delta, theta):
    q, c = bargain_arrays(prefs, delta, policy, theta)
    return q, c, equity_gap(params, worker_utility(prefs, q, c, theta),
                            firm_utility(prefs, q, c, theta))


def optimal_default_transfer(prefs, params, policy, prior, delta):
    """c_d maximizing expected welfare for the policy's interval and default quality."""
    base = policy.replace(c_d=0.0)

    def gap(theta):
        return equity_gaps(prefs, params, base, delta, theta)[2]

    breaks = _breakpoints(prefs, params, policy) + _panel_breaks(prior, prefs)
    return prior.expect(gap, breaks)


def analytic_focs(prefs, params, policy, prior, delta):
    """Gradient of expected welfare in (q_min, q_max, c_d, q_d).

    Quadratic preferences only.  Expected welfare is continuously
    differentiable in the interval ends, so these are ordinary partials.
    """
    if not isinstance(prefs, Quadratic):
        raise TypeError("analytic first-order conditions need quadratic preferences")
    a, beta, gamma = params.alpha, params.beta, params.gamma
    slope = prefs.surplus_slope
    breaks = _breakpoints(prefs, params, policy)

    def gaps(theta):
        return equity_gaps(prefs, params, policy, delta, theta)[2]

    def end_term(qe):
        def fn(theta):
            ds = prefs.dsurplus(qe, theta)
            return ds + gamma * params.du_r(qe) - 2 * INEQUITY_SCALE * beta * gaps(theta) * (a - delta) * ds
        return fn

    def low_term(theta):
        return end_term(policy.q_min)(theta) * (slope * theta < policy.q_min)

    def high_term(theta):
        return end_term(policy.q_max)(theta) * (slope * theta > policy.q_max)

    def c_term(theta):
        return 2 * INEQUITY_SCALE * beta * gaps(theta)

    def qd_term(theta):
        dgap = delta * prefs.du_f(policy.q_d, theta) - (1 - delta) * prefs.du_w(policy.q_d, theta)
        return -2 * INEQUITY_SCALE * beta * gaps(theta) * dgap

    return np.array([prior.expect(fn, breaks) for fn in (low_term, high_term, c_term, qd_term)])
