"""Brute-force cross-checks: grid bargaining, exhaustive policy search, Monte Carlo."""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .bargaining import (
    bargain,
    bargain_arrays,
    firm_utility,
    nash_product,
    split_transfer,
    worker_utility,
)
from .domain import Contract, Policy
from .policy_solver import SEED
from .welfare import INEQUITY_SCALE, equity_gap, swf_values


@dataclass
class OracleReport:
    method: str
    resolution: tuple
    best: object
    objective: float
    discrepancy: float = None
    steps: tuple = None


def grid_bargain(prefs, delta, policy, theta, q_points=201, c_points=201, zoom=1):
    """Exhaustive Nash-product maximization over a (q, c) grid.

    q spans the delegation interval; c spans the band between the two
    agents' participation lines.  Each zoom pass re-grids two steps either
    side of the incumbent at the same point counts, which tracks the
    diagonal ridge of the Nash product.  Ties go to the smallest q, then
    smallest c.
    """
    qs = np.linspace(policy.q_min, policy.q_max, q_points)
    c_floor = policy.c_d - (prefs.u_w(qs, theta) - prefs.u_w(policy.q_d, theta))
    gains = prefs.surplus(qs, theta) - prefs.surplus(policy.q_d, theta)
    cs = np.linspace(c_floor.min(), (c_floor + np.maximum(gains, 0)).max(), c_points)
    steps = (qs[1] - qs[0] if q_points > 1 else 0.0, cs[1] - cs[0] if c_points > 1 else 0.0)

    def search(qs, cs):
        qq, cc = np.meshgrid(qs, cs, indexing="ij")
        vals = nash_product(prefs, delta, (qq, cc), (policy.q_d, policy.c_d), theta)
        best = int(np.argmax(vals))
        return float(qq.flat[best]), float(cc.flat[best]), float(vals.flat[best])

    q, c, value = search(qs, cs)
    dq, dc = steps
    for _ in range(zoom if value > 0 else 0):
        qs = np.linspace(max(q - 2 * dq, policy.q_min), min(q + 2 * dq, policy.q_max), q_points)
        cs = np.linspace(c - 2 * dc, c + 2 * dc, c_points)
        dq, dc = qs[1] - qs[0], cs[1] - cs[0]
        q, c, value = search(qs, cs)
    if value <= 0:
        contract, value = Contract(policy.q_d, policy.c_d, theta), 0.0
    else:
        contract = Contract(q, c, theta)
    ref = bargain(prefs, delta, policy, theta)
    gap = max(abs(ref.q - contract.q), abs(ref.c - contract.c))
    return OracleReport("grid_bargain", (q_points, c_points), contract, value, gap, steps)


def grid_policy_search(prefs, params, delta, prior, resolution=41, c_points=4001, theta_nodes=401,
                       reference=None):
    """Best policy on a grid of (q_min, q_max, q_d) and a fine c_d axis.

    Expected welfare is quadratic in c_d, so for each quality triple the
    c_d axis is scanned in closed form.  Expectations use composite Simpson
    on a uniform state grid, weighted by the prior density, plus atoms.
    Ties go to the lexicographically smallest policy.
    """
    lo, hi = prior.support()
    qs = np.linspace(lo, hi, resolution)
    c_axis = prefs.revenue / 2 + np.linspace(-1.0, 1.0, c_points)
    nodes, weights = _simpson_rule(prior, theta_nodes)

    best_val, best_pol = -np.inf, None
    for i, j in itertools.combinations_with_replacement(range(resolution), 2):
        q_lo, q_hi = qs[i], qs[j]
        q_theta = np.asarray(prefs.surplus_argmax(nodes, q_lo, q_hi), float)
        eff = prefs.surplus(q_theta, nodes) + params.gamma * params.u_r(q_theta)
        mean_eff = float(weights @ eff)
        for q_d in qs[i:j + 1]:
            gain = prefs.surplus(q_theta, nodes) - prefs.surplus(q_d, nodes)
            stay = gain <= 0
            q = np.where(stay, q_d, q_theta)
            c = np.where(stay, 0.0, split_transfer(prefs, delta, q, q_d, 0.0, nodes))
            gap0 = equity_gap(params, worker_utility(prefs, q, c, nodes), firm_utility(prefs, q, c, nodes))
            e_eff = float(weights @ np.where(stay, prefs.surplus(q_d, nodes) + params.gamma * params.u_r(q_d), eff)) \
                if stay.any() else mean_eff
            m1, m2 = float(weights @ gap0), float(weights @ gap0 ** 2)
            # gap falls one-for-one with c_d
            vals = e_eff - params.beta * INEQUITY_SCALE * (m2 - 2 * c_axis * m1 + c_axis ** 2)
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val, best_pol = float(vals[k]), Policy(q_lo, q_hi, q_d, c_axis[k])
    gap = None
    if reference is not None:
        gap = float(np.max(np.abs(best_pol.as_array() - reference.as_array())))
    return OracleReport("grid_policy_search", (resolution, resolution, resolution, c_points),
                        best_pol, best_val, gap)


def _simpson_rule(prior, n):
    """Quadrature nodes and weights for E[f] using Simpson on each density piece."""
    nodes, weights = [], []
    for a, b, dens in prior.pieces():
        x = np.linspace(a, b, n if n % 2 else n + 1)
        basis = np.eye(len(x))
        w = simpson(basis, x=x, axis=1) * dens(x)
        nodes.append(x)
        weights.append(w)
    for theta, mass in prior.atoms():
        nodes.append(np.array([theta]))
        weights.append(np.array([mass]))
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass
class MonteCarloEstimate:
    mean: float
    stderr: float
    n: int
    seed: int


def mc_expected_swf(prefs, params, delta, policy, prior, n, seed=SEED):
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    theta = prior.sample(n, rng)
    q, c = bargain_arrays(prefs, delta, policy, theta)
    vals = swf_values(prefs, params, q, c, theta)
    # identical draws (n = 1, point mass) give exactly zero, not roundoff
    stderr = float(np.std(vals, ddof=1) / np.sqrt(n)) if np.ptp(vals) > 0 else 0.0
    return MonteCarloEstimate(float(np.mean(vals)), stderr, n, seed)
