"""Nash bargaining between worker and firm from a regulated default."""

from dataclasses import dataclass

import numpy as np

from .domain import validate_policy


@dataclass(frozen=True)
class BargainOutcome:
    q: float
    c: float
    theta: float
    gain_w: float
    gain_f: float
    at_default: bool

    @property
    def total_gain(self):
        return self.gain_w + self.gain_f


def worker_utility(prefs, q, c, theta):
    return prefs.y_w + prefs.u_w(q, theta) + c


def firm_utility(prefs, q, c, theta):
    return prefs.y_f + prefs.revenue + prefs.u_f(q, theta) - c


def joint_surplus_maximizer(prefs, interval, theta):
    """Quality maximizing joint surplus on [lo, hi] (smallest q on ties)."""
    lo, hi = interval
    if lo > hi:
        raise ValueError("empty interval")
    return prefs.surplus_argmax(theta, lo, hi)


def split_transfer(prefs, delta, q, q_d, c_d, theta):
    """Transfer giving the worker a delta share of the surplus gain over the default."""
    gain = prefs.surplus(q, theta) - prefs.surplus(q_d, theta)
    return c_d - (prefs.u_w(q, theta) - prefs.u_w(q_d, theta)) + delta * gain


def transfer_closed_form(delta, q, q_d, c_d, theta):
    """Bargained transfer for u_w = -(q - theta)^2, u_f = -q^2."""
    return (c_d + (1 - 2 * delta) * (q * q - q_d * q_d)
            + 2 * (1 - delta) * theta * (q_d - q))


def bargain_arrays(prefs, delta, policy, theta):
    """Vectorized (q, c) bargained in each state of ``theta``."""
    theta = np.asarray(theta, float)
    q = np.asarray(prefs.surplus_argmax(theta, policy.q_min, policy.q_max), float)
    if prefs.standard:
        c = transfer_closed_form(delta, q, policy.q_d, policy.c_d, theta)
    else:
        c = split_transfer(prefs, delta, q, policy.q_d, policy.c_d, theta)
    gain = prefs.surplus(q, theta) - prefs.surplus(policy.q_d, theta)
    # no gain from trade: the default stands verbatim
    stay = gain <= 0
    q = np.where(stay, policy.q_d, q)
    c = np.where(stay, policy.c_d, c)
    return q, c


def bargain(prefs, delta, policy, theta):
    if not 0 <= delta <= 1:
        raise ValueError("delta out of range")
    problems = validate_policy(policy)
    if problems:
        raise ValueError("invalid policy: " + ", ".join(problems))
    q, c = (float(v) for v in bargain_arrays(prefs, delta, policy, theta))
    d_w = worker_utility(prefs, policy.q_d, policy.c_d, theta)
    d_f = firm_utility(prefs, policy.q_d, policy.c_d, theta)
    gain_w = worker_utility(prefs, q, c, theta) - d_w
    gain_f = firm_utility(prefs, q, c, theta) - d_f
    at_default = q == policy.q_d and c == policy.c_d
    return BargainOutcome(q, c, float(theta), float(gain_w), float(gain_f), at_default)


def nash_product(prefs, delta, candidate, default, theta):
    """Weighted Nash product of the gains; zero when either gain is negative."""
    q, c = candidate
    q_d, c_d = default
    gw = np.asarray(worker_utility(prefs, q, c, theta) - worker_utility(prefs, q_d, c_d, theta))
    gf = np.asarray(firm_utility(prefs, q, c, theta) - firm_utility(prefs, q_d, c_d, theta))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.power(np.maximum(gw, 0.0), delta) * np.power(np.maximum(gf, 0.0), 1 - delta)
    val = np.where((gw < 0) | (gf < 0), 0.0, val)
    return val if val.ndim else float(val)
