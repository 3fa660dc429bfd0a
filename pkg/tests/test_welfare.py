import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from default_delegation.domain import Contract, Policy, Power, Quadratic, Tabulated, Uniform01, WelfareParams, point_mass
from default_delegation.oracle import mc_expected_swf
from default_delegation.welfare import (
    INEQUITY_SCALE,
    analytic_focs,
    efficient_quality,
    expected_swf,
    first_best,
    optimal_default_transfer,
    swf_eval,
    swf_values,
)


def test_first_best_example(prefs, equity):
    fb = first_best(prefs, equity, 0.5)
    assert (fb.q, fb.c) == pytest.approx((0.25, 0.5 - 0.0625 + 0.0625))


def test_first_best_transfer_equalizes_at_any_alpha():
    prefs = Quadratic(revenue=1.5)
    params = WelfareParams(beta=1, alpha=0.3)
    fb = first_best(prefs, params, 0.8)
    b = swf_eval(prefs, params, fb)
    assert b.inequity == pytest.approx(0, abs=1e-24)


def test_first_best_without_equity_concern_is_flagged(prefs):
    fb = first_best(prefs, WelfareParams(beta=0, gamma=0.2), 0.5)
    assert fb.indeterminate and math.isnan(fb.c)
    assert fb.q == pytest.approx(0.3)


@given(st.floats(0, 1), st.floats(0, 1))
def test_efficient_quality_matches_brute_force(theta, gamma):
    prefs, params = Quadratic(), WelfareParams(beta=1, gamma=gamma)
    grid = np.linspace(-1, 2, 30001)
    brute = grid[np.argmax(prefs.surplus(grid, theta) + gamma * grid)]
    assert efficient_quality(prefs, params, theta) == pytest.approx(brute, abs=2e-4)


def test_piecewise_externality_kink():
    prefs = Quadratic()
    params = WelfareParams(beta=1, gamma=1, externality=((0.0, 0.4, 1.0), (0.0, 0.4, 0.4)))
    # slope 1 below the kink pushes past it, slope 0 above pulls back: optimum sits on the kink
    assert efficient_quality(prefs, params, 0.5) == pytest.approx(0.4)


def test_breakdown_components(prefs):
    params = WelfareParams(beta=2, gamma=0.5)
    b = swf_eval(prefs, params, Contract(0.4, 0.1, 0.5))
    u_w, u_f = -0.01 + 0.1, 1 - 0.16 - 0.1
    assert b.efficiency == pytest.approx(u_w + u_f)
    assert b.inequity == pytest.approx(INEQUITY_SCALE * (0.5 * u_f - 0.5 * u_w) ** 2)
    assert b.total == pytest.approx(b.efficiency - 2 * b.inequity + 0.5 * 0.4)
    assert swf_values(prefs, params, 0.4, 0.1, 0.5) == pytest.approx(b.total)


def test_expected_swf_point_mass_equals_state_value(prefs, equity):
    pol = Policy(0, 0.5, 0.375, 0.5)
    from default_delegation.bargaining import bargain
    out = bargain(prefs, 0.0, pol, 0.3)
    direct = swf_eval(prefs, equity, Contract(out.q, out.c, 0.3)).total
    assert expected_swf(prefs, equity, pol, point_mass(0.3), 0.0) == pytest.approx(direct, abs=1e-13)


@pytest.mark.parametrize("prior", [Uniform01(), Power(2), Power(1.5),
                                   Tabulated((0, 0.3, 0.3, 1), (0, 0.2, 0.6, 1))])
def test_quadrature_agrees_with_monte_carlo(prefs, prior):
    params = WelfareParams(beta=1.5, gamma=0.3)
    pol = Policy(0.1, 0.4, 0.3, 0.45)
    quad = expected_swf(prefs, params, pol, prior, 0.3)
    mc = mc_expected_swf(prefs, params, 0.3, pol, prior, 100_000)
    assert abs(mc.mean - quad) < 4 * mc.stderr


@given(st.floats(0, 0.45), st.floats(0.55, 1), st.floats(0.05, 0.95), st.floats(0, 1), st.floats(0, 1))
def test_focs_match_finite_differences(q_min, q_max, t, delta, gamma):
    prefs, prior = Quadratic(), Uniform01()
    params = WelfareParams(beta=1.3, gamma=gamma)
    pol = Policy(q_min, q_max, q_min + t * (q_max - q_min), 0.4)
    g = analytic_focs(prefs, params, pol, prior, delta)
    h = 1e-6
    for i, name in enumerate(("q_min", "q_max", "c_d", "q_d")):
        x = getattr(pol, name)
        up = expected_swf(prefs, params, pol.replace(**{name: x + h}), prior, delta)
        dn = expected_swf(prefs, params, pol.replace(**{name: x - h}), prior, delta)
        assert g[i] == pytest.approx((up - dn) / (2 * h), abs=2e-6)


@given(st.floats(0, 1), st.floats(0.1, 3))
def test_optimal_default_transfer_zeroes_its_derivative(delta, beta):
    prefs, prior = Quadratic(), Uniform01()
    params = WelfareParams(beta=beta)
    pol = Policy(0.1, 0.45, 0.3, 0.0)
    pol = pol.replace(c_d=optimal_default_transfer(prefs, params, pol, prior, delta))
    assert analytic_focs(prefs, params, pol, prior, delta)[2] == pytest.approx(0, abs=1e-12)


def test_tabulated_prefs_agree_with_quadratic():
    from default_delegation.domain import TabulatedPrefs
    quad = Quadratic()
    q = np.linspace(-0.5, 1.5, 801)
    th = np.linspace(0, 1, 201)
    tab = TabulatedPrefs.from_functions(quad.u_w, quad.u_f, q, th, revenue=1.0)
    params = WelfareParams(beta=1)
    pol = Policy(0.1, 0.45, 0.3, 0.5)
    a = expected_swf(quad, params, pol, Uniform01(), 0.3)
    b = expected_swf(tab, params, pol, Uniform01(), 0.3)
    assert a == pytest.approx(b, abs=2e-4)
