"""Value types shared across the package: states, priors, preferences, policies."""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import RegularGridInterpolator

GL_NODES = 64
_GL_X, _GL_W = leggauss(GL_NODES)


def gauss_legendre(fn, a, b):
    """Integrate a vectorized callable over [a, b] with a fixed 64-node rule."""
    if b <= a:
        return 0.0
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _GL_X
    return half * float(np.dot(_GL_W, fn(x)))


def adaptive_gauss_legendre(fn, a, b, tol=1e-13, depth=30):
    whole = gauss_legendre(fn, a, b)
    mid = 0.5 * (a + b)
    left, right = gauss_legendre(fn, a, mid), gauss_legendre(fn, mid, b)
    if depth == 0 or abs(left + right - whole) <= tol:
        return left + right
    return (adaptive_gauss_legendre(fn, a, mid, tol / 2, depth - 1)
            + adaptive_gauss_legendre(fn, mid, b, tol / 2, depth - 1))


# ---------------------------------------------------------------- states

@dataclass(frozen=True)
class FiniteStates:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("finite state space must be non-empty")
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("states must be finite")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("states must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @property
    def bounds(self):
        return self.values[0], self.values[-1]


@dataclass(frozen=True)
class IntervalStates:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("interval state space needs lo < hi")

    @property
    def bounds(self):
        return self.lo, self.hi


# ---------------------------------------------------------------- priors

@dataclass(frozen=True)
class Moments:
    mu1: float
    mu2: float
    mu3: float

    @property
    def variance(self):
        return self.mu2 - self.mu1 ** 2

    @property
    def degenerate(self):
        return self.variance <= 1e-14 * max(1.0, self.mu2)


class Prior:
    """Distribution of the state over a bounded support.

    Subclasses describe themselves as absolutely continuous pieces
    ``(a, b, density)`` plus point masses ``(theta, weight)``.
    """

    smooth = True  # densities are polynomials on each piece

    def pieces(self):
        raise NotImplementedError

    def atoms(self):
        return []

    def support(self):
        raise NotImplementedError

    def cdf(self, theta):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def sample(self, n, rng):
        return self.ppf(rng.random(n))

    def expect(self, fn, breakpoints=(), upper=None):
        """E[fn(theta)], optionally restricted to theta <= upper.

        ``breakpoints`` are places where ``fn`` has kinks; pieces are split
        there so every panel sees a smooth integrand.
        """
        total = 0.0
        for a, b, dens in self.pieces():
            if upper is not None:
                b = min(b, upper)
            if b <= a:
                continue
            cuts = sorted({a, b, *(p for p in breakpoints if a < p < b)})

            def weighted(x, dens=dens):
                return fn(x) * dens(x)

            for lo, hi in zip(cuts, cuts[1:]):
                if self.smooth:
                    total += gauss_legendre(weighted, lo, hi)
                else:
                    total += adaptive_gauss_legendre(weighted, lo, hi)
        for theta, w in self.atoms():
            if upper is None or theta <= upper:
                total += w * float(np.asarray(fn(np.array([theta])))[0])
        return total

    def quadrature_moments(self):
        return Moments(*(self.expect(lambda x, n=n: x ** n) for n in (1, 2, 3)))


@dataclass(frozen=True)
class Power(Prior):
    """G(theta) = theta**k on [0, 1]; k = 1 is the uniform prior."""

    k: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k >= 1):
            raise ValueError("power prior requires k >= 1")

    @property
    def smooth(self):
        return float(self.k).is_integer()

    def pieces(self):
        k = self.k
        return [(0.0, 1.0, lambda x: k * x ** (k - 1))]

    def support(self):
        return 0.0, 1.0

    def cdf(self, theta):
        return np.clip(np.asarray(theta, float), 0.0, 1.0) ** self.k

    def ppf(self, u):
        return np.asarray(u, float) ** (1.0 / self.k)

    def moments(self):
        k = self.k
        return Moments(k / (k + 1), k / (k + 2), k / (k + 3))


@dataclass(frozen=True)
class Uniform01(Power):
    k: float = field(default=1.0, init=False)


@dataclass(frozen=True)
class Tabulated(Prior):
    """Piecewise-linear cdf through (theta, cdf) knots.

    A repeated theta encodes a jump of the cdf, i.e. a point mass.
    """

    theta: tuple
    cdf_values: tuple

    def __post_init__(self):
        t = np.asarray(self.theta, float)
        f = np.asarray(self.cdf_values, float)
        if t.ndim != 1 or t.shape != f.shape or len(t) < 2:
            raise ValueError("tabulated prior needs matching theta and cdf arrays")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f))):
            raise ValueError("tabulated prior values must be finite")
        if np.any(np.diff(t) < 0):
            raise ValueError("tabulated theta must be nondecreasing")
        if np.any(np.diff(f) < 0):
            raise ValueError("cdf must be nondecreasing")
        if f[0] != 0.0 or f[-1] != 1.0:
            raise ValueError("cdf must start at 0 and end at 1")
        object.__setattr__(self, "theta", tuple(t.tolist()))
        object.__setattr__(self, "cdf_values", tuple(f.tolist()))

    def _segments(self):
        t, f = self.theta, self.cdf_values
        return [(t[i], t[i + 1], f[i + 1] - f[i]) for i in range(len(t) - 1)
                if f[i + 1] > f[i]]

    def pieces(self):
        out = []
        for a, b, mass in self._segments():
            if b > a:
                dens = mass / (b - a)
                out.append((a, b, lambda x, d=dens: np.full_like(np.asarray(x, float), d)))
        return out

    def atoms(self):
        merged = {}
        for a, b, mass in self._segments():
            if b == a:
                merged[a] = merged.get(a, 0.0) + mass
        return sorted(merged.items())

    def support(self):
        segs = self._segments()
        return segs[0][0], segs[-1][1]

    def cdf(self, theta):
        t = np.asarray(self.theta)
        f = np.asarray(self.cdf_values)
        x = np.asarray(theta, float)
        # right-continuous: take the last knot at or below x
        idx = np.searchsorted(t, x, side="right") - 1
        out = np.empty_like(x)
        below, above = idx < 0, idx >= len(t) - 1
        mid = ~(below | above)
        i = idx[mid]
        span = t[i + 1] - t[i]
        frac = np.where(span > 0, (x[mid] - t[i]) / np.where(span > 0, span, 1.0), 0.0)
        out[mid] = f[i] + frac * (f[i + 1] - f[i])
        out[below], out[above] = 0.0, 1.0
        return out

    def ppf(self, u):
        t = np.asarray(self.theta)
        f = np.asarray(self.cdf_values)
        u = np.asarray(u, float)
        i = np.clip(np.searchsorted(f, u, side="left"), 1, len(f) - 1)
        span = f[i] - f[i - 1]
        frac = np.where(span > 0, (u - f[i - 1]) / np.where(span > 0, span, 1.0), 1.0)
        out = t[i - 1] + frac * (t[i] - t[i - 1])
        return np.where(u <= 0, self.support()[0], out)

    def moments(self):
        return self.quadrature_moments()


def point_mass(theta0):
    return Tabulated((theta0, theta0), (0.0, 1.0))


def prior_moments(prior):
    """First three raw moments; check ``.degenerate`` before dividing by the variance."""
    return prior.moments()


def check_prior_support(prior, states):
    lo, hi = prior.support()
    s_lo, s_hi = states.bounds
    if lo < s_lo or hi > s_hi:
        raise ValueError(f"prior support [{lo}, {hi}] outside state space [{s_lo}, {s_hi}]")


# ---------------------------------------------------------------- preferences

@dataclass(frozen=True)
class Quadratic:
    """Quadratic quality utilities  u(q, theta) = -k q^2 + m q theta - n theta^2.

    ``worker`` and ``firm`` hold the (k, m, n) coefficients.  The defaults give
    the worker bliss point at the state, u_w = -(q - theta)^2, and a
    state-independent firm cost u_f = -q^2.  ``revenue`` is the firm's fixed
    revenue and ``y_w``/``y_f`` are additive income offsets.
    """

    revenue: float = 1.0
    y_w: float = 0.0
    y_f: float = 0.0
    worker: tuple = (1.0, 2.0, 1.0)
    firm: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        w = tuple(float(v) for v in self.worker)
        f = tuple(float(v) for v in self.firm)
        if len(w) != 3 or len(f) != 3:
            raise ValueError("quadratic coefficients come in (k, m, n) triples")
        vals = (self.revenue, self.y_w, self.y_f, *w, *f)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("preference parameters must be finite")
        if w[0] < 0 or f[0] < 0 or w[0] + f[0] <= 0:
            raise ValueError("quality curvatures must be nonnegative with positive sum")
        object.__setattr__(self, "worker", w)
        object.__setattr__(self, "firm", f)

    @property
    def standard(self):
        """True for the bliss-point worker / state-free firm specification."""
        return self.worker == (1.0, 2.0, 1.0) and self.firm == (1.0, 0.0, 0.0)

    @staticmethod
    def _u(coef, q, theta):
        k, m, n = coef
        return -k * q * q + m * q * theta - n * theta * theta

    @staticmethod
    def _du(coef, q, theta):
        k, m, _ = coef
        return -2 * k * q + m * theta

    def u_w(self, q, theta):
        return self._u(self.worker, q, theta)

    def u_f(self, q, theta):
        return self._u(self.firm, q, theta)

    def du_w(self, q, theta):
        return self._du(self.worker, q, theta)

    def du_f(self, q, theta):
        return self._du(self.firm, q, theta)

    def surplus(self, q, theta):
        """Joint surplus U_w + U_f, transfers cancelling."""
        return self.revenue + self.y_w + self.y_f + self.u_w(q, theta) + self.u_f(q, theta)

    def dsurplus(self, q, theta):
        return self.du_w(q, theta) + self.du_f(q, theta)

    @property
    def surplus_slope(self):
        """Unconstrained surplus maximizer is surplus_slope * theta."""
        return (self.worker[1] + self.firm[1]) / (2 * (self.worker[0] + self.firm[0]))

    @property
    def surplus_curvature(self):
        return 2 * (self.worker[0] + self.firm[0])

    def surplus_argmax(self, theta, lo=-np.inf, hi=np.inf):
        return np.clip(self.surplus_slope * np.asarray(theta, float), lo, hi)

    def cross_partials(self, q, theta):
        return self.worker[1], self.firm[1]


@dataclass(frozen=True, eq=False)
class TabulatedPrefs:
    """Utilities sampled on a rectangular (q, theta) grid, bilinear in between."""

    q_grid: tuple
    theta_grid: tuple
    worker_table: tuple
    firm_table: tuple
    revenue: float = 1.0
    y_w: float = 0.0
    y_f: float = 0.0
    standard = False

    def __post_init__(self):
        q = np.asarray(self.q_grid, float)
        t = np.asarray(self.theta_grid, float)
        w = np.asarray(self.worker_table, float)
        f = np.asarray(self.firm_table, float)
        if len(q) < 3 or len(t) < 2:
            raise ValueError("tabulated preferences need >= 3 q points and >= 2 theta points")
        if np.any(np.diff(q) <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("tabulated grids must be strictly increasing")
        if w.shape != (len(q), len(t)) or f.shape != w.shape:
            raise ValueError("utility tables must have shape (len(q_grid), len(theta_grid))")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(f))):
            raise ValueError("utility tables must be finite")
        for name, val in (("q_grid", q), ("theta_grid", t), ("worker_table", w), ("firm_table", f)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "_w", RegularGridInterpolator((q, t), w, bounds_error=False, fill_value=None))
        object.__setattr__(self, "_f", RegularGridInterpolator((q, t), f, bounds_error=False, fill_value=None))

    @classmethod
    def from_functions(cls, u_w, u_f, q_grid, theta_grid, **kw):
        qq, tt = np.meshgrid(np.asarray(q_grid, float), np.asarray(theta_grid, float), indexing="ij")
        return cls(q_grid, theta_grid, u_w(qq, tt), u_f(qq, tt), **kw)

    def _eval(self, interp, q, theta):
        q, theta = np.broadcast_arrays(np.asarray(q, float), np.asarray(theta, float))
        pts = np.stack([q.ravel(), theta.ravel()], axis=-1)
        out = interp(pts).reshape(q.shape)
        return out if out.ndim else float(out)

    def u_w(self, q, theta):
        return self._eval(self._w, q, theta)

    def u_f(self, q, theta):
        return self._eval(self._f, q, theta)

    def surplus(self, q, theta):
        return self.revenue + self.y_w + self.y_f + self.u_w(q, theta) + self.u_f(q, theta)

    def surplus_argmax(self, theta, lo=-np.inf, hi=np.inf):
        """Exact argmax of the interpolated surplus on [lo, hi].

        The interpolant is piecewise linear in q, so only grid nodes inside
        the interval and the interval ends are candidates.  Ties go to the
        smallest q.
        """
        nodes = self.q_grid[(self.q_grid > lo) & (self.q_grid < hi)]
        ends = [v for v in (lo, hi) if np.isfinite(v)]
        cand = np.unique(np.concatenate([nodes, ends]))
        theta = np.asarray(theta, float)
        vals = self.surplus(cand[:, None], theta.ravel()[None, :])
        best = cand[np.argmax(vals, axis=0)].reshape(theta.shape)
        return best if best.ndim else float(best)

    def cross_partials(self, q, theta, h=1e-4):
        def mixed(fn):
            return (fn(q + h, theta + h) - fn(q + h, theta - h)
                    - fn(q - h, theta + h) + fn(q - h, theta - h)) / (4 * h * h)
        return mixed(self.u_w), mixed(self.u_f)


# ---------------------------------------------------------------- welfare parameters

@dataclass(frozen=True)
class WelfareParams:
    """Inequity weight ``beta``, externality weight ``gamma``, worker share ``alpha``.

    ``externality`` is None for the linear externality U_r(q) = q, or a pair
    of (q knots, values) interpolated piecewise linearly.
    """

    beta: float = 1.0
    gamma: float = 0.0
    alpha: float = 0.5
    externality: tuple = None

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError("beta must be >= 0")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError("gamma must be >= 0")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.externality is not None:
            q, v = (tuple(float(x) for x in part) for part in self.externality)
            if len(q) != len(v) or len(q) < 2 or any(b <= a for a, b in zip(q, q[1:])):
                raise ValueError("tabulated externality needs >= 2 increasing knots")
            object.__setattr__(self, "externality", (q, v))

    @property
    def linear_externality(self):
        return self.externality is None

    def u_r(self, q):
        if self.externality is None:
            return np.asarray(q, float) if np.ndim(q) else float(q)
        return np.interp(q, *self.externality)

    def du_r(self, q):
        if self.externality is None:
            return np.ones_like(np.asarray(q, float))
        knots, vals = (np.asarray(a) for a in self.externality)
        slopes = np.concatenate([[0.0], np.diff(vals) / np.diff(knots), [0.0]])
        return slopes[np.searchsorted(knots, q, side="right")]


# ---------------------------------------------------------------- policies and contracts

@dataclass(frozen=True)
class Policy:
    q_min: float
    q_max: float
    q_d: float
    c_d: float

    def __post_init__(self):
        for name in ("q_min", "q_max", "q_d", "c_d"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def replace(self, **kw):
        return Policy(**{**self.__dict__, **kw})

    def as_array(self):
        return np.array([self.q_min, self.q_max, self.q_d, self.c_d])


@dataclass(frozen=True)
class Contract:
    q: float
    c: float
    theta: float
    indeterminate: bool = False


def validate_policy(policy):
    """List of violated policy invariants; empty when the policy is valid."""
    vals = (policy.q_min, policy.q_max, policy.q_d, policy.c_d)
    if not all(math.isfinite(v) for v in vals):
        return ["non-finite value"]
    problems = []
    if policy.q_min > policy.q_max:
        problems.append("empty interval")
    if policy.q_d < policy.q_min:
        problems.append("default below minimum")
    if policy.q_d > policy.q_max:
        problems.append("default above maximum")
    return problems
