"""Comparative statics: parameter sweeps and prior comparisons."""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .domain import Policy, Power, validate_policy
from .policy_solver import solve

CSV_COLUMNS = ("axis", "value", "q_min", "q_max", "q_d", "c_d", "welfare", "branch", "flag")
DEFAULT_GRIDS = {
    "beta": tuple(float(b) for b in np.arange(0, 5.0001, 0.25)) + (10.0, 20.0, 50.0),
    "gamma": tuple(round(g, 10) for g in np.arange(0, 1.0001, 0.05)),
    "delta": tuple(round(d, 10) for d in np.arange(0, 1.0001, 0.1)),
}


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: object
    q_min: float
    q_max: float
    q_d: float
    c_d: float
    welfare: float
    branch: str
    flag: str


@dataclass
class SweepTable:
    axis: str
    rows: list

    def to_csv(self, digits=12):
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(CSV_COLUMNS)
        for r in self.rows:
            nums = [f"{getattr(r, k):.{digits}g}" for k in ("q_min", "q_max", "q_d", "c_d", "welfare")]
            value = r.value if isinstance(r.value, str) else f"{r.value:.{digits}g}"
            out.writerow([r.axis, value, *nums, r.branch, r.flag])
        return buf.getvalue()


def prior_label(prior):
    return f"power:{prior.k:g}" if isinstance(prior, Power) else "tabulated"


def _solve_point(args):
    prefs, params, delta, prior, axis, value = args
    if axis == "beta":
        params = replace(params, beta=value)
    elif axis == "gamma":
        params = replace(params, gamma=value)
    elif axis == "delta":
        delta = value
    else:
        prior, value = value, prior_label(value)
    rep = solve(prefs, params, delta, prior)
    flags = ";".join(sorted(k for k, v in rep.flags.items() if v))
    p = rep.policy
    return SweepRow(axis, value, p.q_min, p.q_max, p.q_d, p.c_d, rep.expected_welfare, rep.branch, flags)


def sweep(prefs, params, delta, prior, axis, grid=None, workers=1):
    """Solve the regulator's problem at every grid value of one parameter.

    ``axis`` is beta, gamma, delta or prior; for the prior axis the grid is
    a sequence of priors.  Rows come back in grid order whatever ``workers``.
    """
    if axis not in ("beta", "gamma", "delta", "prior"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    grid = list(DEFAULT_GRIDS[axis] if grid is None else grid)
    if not grid:
        raise ValueError("sweep grid is empty")
    if axis != "prior" and any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be sorted")
    jobs = [(prefs, params, delta, prior, axis, v) for v in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_solve_point, jobs))
    else:
        rows = [_solve_point(j) for j in jobs]
    for r in rows:
        if validate_policy(_policy_of(r)):
            raise RuntimeError(f"sweep produced an invalid policy at {r.value}")
    return SweepTable(axis, rows)


def _policy_of(row):
    return Policy(row.q_min, row.q_max, row.q_d, row.c_d)


# ---------------------------------------------------------------- prior comparison

class DominanceError(ValueError):
    def __init__(self, theta):
        super().__init__(f"first-order dominance fails at theta = {theta:.6g}")
        self.theta = theta


@dataclass
class FosdReport:
    low: object
    high: object
    ordering: dict
    consistent: bool
    degenerate: bool
    note: str = ""


def check_dominance(prior_lo, prior_hi, n=2001, tol=1e-12):
    """Raise unless prior_hi's cdf lies weakly below prior_lo's everywhere."""
    a = min(prior_lo.support()[0], prior_hi.support()[0])
    b = max(prior_lo.support()[1], prior_hi.support()[1])
    grid = np.linspace(a, b, n)
    bad = np.nonzero(np.asarray(prior_hi.cdf(grid)) > np.asarray(prior_lo.cdf(grid)) + tol)[0]
    if bad.size:
        raise DominanceError(float(grid[bad[0]]))


def compare_fosd(prefs, params, prior_lo, prior_hi):
    """Aligned-bargaining optimum under a prior and under one that dominates it.

    The dominating prior should raise the default quality and the minimum
    quality and lower the default transfer.
    """
    check_dominance(prior_lo, prior_hi)
    delta = params.alpha
    lo = solve(prefs, params, delta, prior_lo)
    hi = solve(prefs, params, delta, prior_hi)
    if prior_lo == prior_hi:
        ordering = {k: "equal" for k in ("q_d", "c_d", "q_min")}
        return FosdReport(lo, hi, ordering, True, True, "degenerate comparison")

    def compare(a, b, tol=1e-9):
        return "equal" if abs(a - b) <= tol else ("higher" if b > a else "lower")

    ordering = {
        "q_d": compare(lo.policy.q_d, hi.policy.q_d),
        "c_d": compare(lo.policy.c_d, hi.policy.c_d),
        "q_min": compare(lo.policy.q_min, hi.policy.q_min),
    }
    consistent = (ordering["q_d"] in ("higher", "equal") and ordering["c_d"] in ("lower", "equal")
                  and ordering["q_min"] in ("higher", "equal"))
    return FosdReport(lo, hi, ordering, consistent, False)
