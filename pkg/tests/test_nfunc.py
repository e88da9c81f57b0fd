import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from orliczgn import nfunc as N
from orliczgn.errors import BracketFailure, ConfigError, DegenerateRatio

Y = np.logspace(-2, 2, 201)


def brute_conjugate(value, y, hi=60.0):
    # independent oracle: bounded scalar maximization of x y - M(x)
    res = minimize_scalar(lambda x: -(x * y - value(x)), bounds=(0.0, hi), method="bounded",
                          options={"xatol": 1e-12})
    return -res.fun


def test_self_conjugate_quadratic():
    m = N.power(2, 0.5)
    num = N.conjugate(m, use_analytic=False)
    np.testing.assert_allclose(num.value(Y), Y ** 2 / 2, rtol=1e-6)


def test_cubic_conjugate_closed_form():
    m = N.power(3, 1 / 3)
    num = N.conjugate(m, use_analytic=False)
    np.testing.assert_allclose(num.value(Y), Y ** 1.5 / 1.5, rtol=1e-6)


def test_exp_conjugate_closed_form_against_brute_force():
    m = N.exp_family()
    ys = np.array([0.01, 0.3, 1.0, 4.0, 20.0])
    brute = np.array([brute_conjugate(lambda x: math.expm1(x) - x, y) for y in ys])
    closed = (1 + ys) * np.log1p(ys) - ys
    np.testing.assert_allclose(brute, closed, rtol=1e-7)
    np.testing.assert_allclose(m.analytic_conjugate.value(ys), closed, rtol=1e-12)
    np.testing.assert_allclose(N.conjugate(m, use_analytic=False).value(ys), closed, rtol=1e-6)


def test_conjugate_prefers_the_closed_form():
    m = N.power(3)
    assert N.conjugate(m) is m.analytic_conjugate


def test_numeric_conjugate_is_convex_and_increasing():
    c = N.conjugate(N.powerlog(2, 1))
    v = np.asarray(c.value(Y))
    assert float(np.asarray(c.value(0.0))) == 0.0
    assert np.all(np.diff(v) > 0)
    s = np.diff(v) / np.diff(Y)
    assert np.all(np.diff(s) >= -1e-9 * s[1:])


def test_sublinear_function_has_no_bracket():
    sub = N.NFunction(lambda x: np.sqrt(np.asarray(x, float)),
                      lambda x: 0.5 / np.sqrt(np.asarray(x, float)), "sqrt")
    with pytest.raises(BracketFailure):
        N.conjugate(sub)


@pytest.mark.parametrize("m", [N.power(2), N.power(3), N.powerlog(2, 1), N.exp_family()],
                         ids=lambda m: m.label)
def test_biconjugation(m):
    lam = np.logspace(-2, 2, 81)
    c1 = N.conjugate(m, use_analytic=False)
    c2 = N.conjugate(c1, use_analytic=False)
    v = np.asarray(m.value(lam))
    np.testing.assert_allclose(c2.value(lam), v, rtol=1e-5)


def test_young_gap_examples():
    m = N.power(2, 0.5)
    assert N.young_gap(m, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert N.young_gap(m, 1.0, 2.0) == pytest.approx(0.5, abs=1e-15)
    cubic = N.power(3, 1 / 3)
    # brute-force sup of x - x^3/3 is 2/3, so the gap at (2, 1) is 8/3 + 2/3 - 2
    star = brute_conjugate(lambda x: x ** 3 / 3, 1.0)
    assert star == pytest.approx(2 / 3, rel=1e-9)
    assert N.young_gap(cubic, 2.0, 1.0) == pytest.approx(8 / 3 + star - 2, rel=1e-9)


@pytest.mark.parametrize("m", [N.power(1.5), N.power(4), N.powerlog(3, 2), N.exp_family()],
                         ids=lambda m: m.label)
def test_young_gap_nonnegative_on_random_pairs(m):
    rng = np.random.default_rng(7)
    x, y = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), (2, 100_000)))
    if m.label == "exp":
        x = np.minimum(x, 50.0)
    gap = N.young_gap(m, x, y)
    assert np.all(gap >= -1e-9 * np.maximum(1.0, x * y))


@given(st.floats(1e-3, 1e2))
def test_young_equality_at_the_derivative(x):
    m = N.powerlog(2.5, 1.0)
    conj = N.conjugate(m)
    y = float(m.derivative(np.array([x]))[0])
    mx, my = float(m.value(np.array([x]))[0]), float(conj.value(np.array([y]))[0])
    assert N.young_gap(m, x, y, conj) <= 1e-6 * (mx + my)


def test_indices_of_a_power():
    idx = N.simonenko_indices(N.power(3))
    assert idx.lower == pytest.approx(3, abs=1e-8)
    assert idx.upper == pytest.approx(3, abs=1e-8)
    assert idx.lower_gt_one and not idx.upper_unbounded


def test_indices_of_powerlog_against_refined_maximum():
    # oracle: 2 + max l/((2+l)ln(2+l)), maximized by bounded scalar search
    res = minimize_scalar(lambda l: -l / ((2 + l) * math.log(2 + l)), bounds=(1e-6, 100),
                          method="bounded", options={"xatol": 1e-12})
    upper = 2 - res.fun
    assert upper == pytest.approx(2.3733646177016743, rel=1e-12)
    idx = N.simonenko_indices(N.powerlog(2, 1))
    assert idx.upper == pytest.approx(upper, rel=1e-9)
    assert idx.lower == pytest.approx(2.0, abs=1e-6)


def test_exp_upper_index_unbounded():
    idx = N.simonenko_indices(N.exp_family())
    assert idx.upper_unbounded
    assert idx.upper > 100


def test_degenerate_ratio():
    shifted = N.NFunction(lambda x: np.maximum(np.asarray(x, float) - 1, 0) ** 2,
                          lambda x: 2 * np.maximum(np.asarray(x, float) - 1, 0), "shift")
    with pytest.raises(DegenerateRatio):
        N.simonenko_indices(shifted)


@pytest.mark.parametrize("m", [N.power(2), N.power(3.5), N.powerlog(2, 1), N.powerlog(3, -0.5)],
                         ids=lambda m: m.label)
def test_index_bound_on_the_defining_grid(m):
    lam = N.default_grid()
    idx = N.simonenko_indices(m)
    v = np.asarray(m.value(lam))
    r = lam * np.asarray(m.derivative(lam))
    assert np.all(idx.lower * v <= r * (1 + 1e-12))
    assert np.all(r <= idx.upper * v * (1 + 1e-12))


def test_scale_bound_examples():
    sq = N.simonenko_indices(N.power(2))
    assert N.scale_bound(sq, 3.0) == pytest.approx(9.0, rel=1e-12)
    assert N.scale_bound(sq, 1.0) == 1.0
    pl = N.powerlog(2, 1)
    idx = N.simonenko_indices(pl)
    assert N.scale_bound(idx, 0.5) == pytest.approx(0.25, rel=1e-7)
    lam = np.logspace(-8, 8, 4001)
    direct = np.max(pl.value(0.5 * lam) / pl.value(lam))
    # the sup is approached as lam -> 0; the grid inf of the lower index sits 1e-8 above 2
    assert direct <= N.scale_bound(idx, 0.5) * (1 + 1e-8)


@given(st.floats(1.01, 6.0), st.floats(1e-3, 1e3), st.floats(1e-6, 1e6))
def test_scale_bound_dominates_dilation(p, a, lam):
    m = N.power(p)
    idx = N.simonenko_indices(m)
    assert m.value(a * lam) <= N.scale_bound(idx, a) * m.value(lam) * (1 + 1e-8)


def test_delta2_examples():
    assert N.delta2_constant(N.power(2)).constant == pytest.approx(4.0, rel=1e-12)
    d = N.delta2_constant(N.powerlog(2, 1))
    assert 4 < d.constant < 8 and d.holds
    # brute force over a finer grid
    lam = np.logspace(-8, 8, 20001)
    m = N.powerlog(2, 1)
    assert d.constant == pytest.approx(np.max(m.value(2 * lam) / m.value(lam)), rel=1e-4)
    assert not N.delta2_constant(N.exp_family()).holds


@pytest.mark.parametrize("m", [N.power(1.5), N.power(2), N.powerlog(2, 1), N.powerlog(3, 2)],
                         ids=lambda m: m.label)
def test_delta2_below_two_to_upper_index(m):
    idx = N.simonenko_indices(m)
    assert N.delta2_constant(m).constant <= 2 ** idx.upper * (1 + 1e-6)


def test_condition_m_boundary_at_two():
    for p, expect in [(1.2, False), (1.5, False), (1.9, False), (2.0, True), (3.0, True)]:
        rep = N.check_conditions(N.power(p))
        assert rep.derivative_bounded_at_zero is expect
        assert rep.delta2
    assert not N.check_conditions(N.power(1.5)).ratio_over_square_nondecreasing
    assert N.check_conditions(N.power(2.5)).ratio_over_square_nondecreasing


@pytest.mark.parametrize("m", [N.power(1.5), N.power(4), N.powerlog(2, 1), N.exp_family(),
                               N.conjugate(N.power(3), use_analytic=False)],
                         ids=lambda m: m.label)
def test_nfunction_invariants(m):
    audit = N.check_nfunction(m)
    assert all(audit.values()), audit


def test_overflow_saturates_at_cap():
    m = N.exp_family()
    v = m.value(np.array([1e4]))
    assert np.isfinite(v).all() and v[0] == N.CAP
    assert m.saturated(np.array([1e4]))[0]


def test_registry_specs():
    assert N.from_spec("power(3)").label == N.power(3).label
    assert N.from_spec("powerlog(p=2, alpha=1)").label == N.powerlog(2, 1).label
    assert N.from_spec("exp").label == "exp"
    for bad in ("nope(1)", "power(0.5)", "power(", "powerlog(2,1,3)"):
        with pytest.raises(ConfigError):
            N.from_spec(bad)
