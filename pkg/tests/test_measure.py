import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as spi

from orliczgn import measure as M
from orliczgn.errors import BadParams, ConfigError, NonConvergent, OutOfDomain


def exp_measure():
    # e^{-x} dx on (0, inf) as a custom measure
    return M.custom(lambda x: np.asarray(x, float), lambda x: np.ones_like(np.asarray(x, float)),
                    0.0, math.inf)


def one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def test_unit_mass_and_gamma_three():
    mu = exp_measure()
    assert M.integrate(one, mu).value == pytest.approx(1.0, rel=1e-12)
    assert M.integrate(lambda x: x ** 2, mu).value == pytest.approx(2.0, rel=1e-12)


def test_gaussian_half_integral_against_independent_oracles():
    val = M.integrate(one, M.power_exponential(0, 2)).value
    ref, _ = spi.quad(lambda x: math.exp(-x * x), 0, math.inf, epsabs=1e-14)
    rng = np.random.default_rng(2024)
    # Monte Carlo: E[exp(-X^2) / exp(-X)] for X ~ Exp(1)
    x = rng.exponential(size=400_000)
    mc = np.mean(np.exp(-x * x + x))
    assert val == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)
    assert val == pytest.approx(ref, rel=1e-10)
    assert val == pytest.approx(mc, rel=5e-3)


def test_weight_at_examples():
    d, g = M.weight_at(M.power_exponential(0, 2), 1.0)
    assert d == pytest.approx(math.exp(-1)) and g == pytest.approx(2.0)
    d, g = M.weight_at(M.power_weight(2), 2.0)
    assert d == pytest.approx(4.0) and g == pytest.approx(1.0)
    d, g = M.weight_at(M.distance(1.0), 0.25)
    assert d == pytest.approx(0.25) and g == pytest.approx(4.0)
    with pytest.raises(OutOfDomain):
        M.weight_at(M.distance(1.0), 1.5)
    with pytest.raises(OutOfDomain):
        M.weight_at(M.gaussian(), 0.0)


@pytest.mark.parametrize("deg", range(11))
def test_polynomial_exactness(deg):
    r = M.quad(lambda x: x ** deg, 0.0, 1.0)
    assert r.value == pytest.approx(1.0 / (deg + 1), abs=1e-12)


def test_infinite_map_matches_explicit_substitution():
    direct = M.quad(lambda x: np.exp(-x), 0.0, math.inf).value

    def pulled(t):
        return np.exp(-t / (1 - t)) / (1 - t) ** 2
    via = M.quad(pulled, 0.0, 1.0).value
    assert direct == pytest.approx(via, abs=1e-10)
    assert M.quad(lambda x: np.exp(-x * x), -math.inf, math.inf).value == pytest.approx(
        math.sqrt(math.pi), rel=1e-11)


def test_integrable_endpoint_singularity():
    assert M.quad(lambda x: x ** -0.5, 0.0, 1.0).value == pytest.approx(2.0, rel=1e-8)
    assert M.quad(lambda x: x ** -0.5, 0.0, 1.0, left_power=2).value == pytest.approx(2.0, rel=1e-12)


def test_non_integrable_singularity_reports_nonconvergence():
    s = M.QuadratureSettings(max_subdivisions=200)
    with pytest.raises(NonConvergent):
        M.quad(lambda x: 1.0 / x, 0.0, 1.0, s)


def test_distance_kink_is_a_breakpoint():
    mu = M.distance(1.0)
    assert mu.breakpoints == (0.5,)
    # int_0^1 delta(x) dx = 1/4
    assert M.integrate(one, mu).value == pytest.approx(0.25, abs=1e-14)


def test_support_restriction():
    mu = M.lebesgue(0.0, 10.0)
    r = M.integrate(lambda x: x, mu, support=(1.0, 3.0))
    assert r.value == pytest.approx(4.0, rel=1e-13)
    assert M.integrate(lambda x: x, mu, support=(20.0, 30.0)).value == 0.0


def test_integration_rule_reproduces_the_integral():
    mu = M.gaussian()
    x, w = M.integration_rule(lambda t: t ** 2, mu)
    assert np.dot(w, x ** 2) == pytest.approx(math.sqrt(math.pi) / 4, rel=1e-9)


def test_log_mode_avoids_overflow():
    mu = M.gaussian()
    # int exp(x^2 / 2) e^{-x^2} dx = sqrt(pi/2); integrand alone overflows for x > 38
    r = M.integrate(lambda x: x * x / 2, mu, log=True)
    assert r.value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)


@given(st.sampled_from(["power", "powerexp", "distance"]), st.floats(0.0, 3.0),
       st.floats(0.5, 3.0), st.floats(0.02, 0.98))
def test_phi_prime_matches_finite_differences(family, alpha, beta, t):
    if family == "power":
        mu, x = M.power_weight(alpha), 10 * t
    elif family == "powerexp":
        mu, x = M.power_exponential(alpha, beta), 5 * t
    else:
        mu, x = M.distance(alpha), t
        if abs(x - 0.5) < 1e-3:
            return
    h = 1e-6 * max(x, 1e-3)
    xs = np.array([x - h, x + h])
    fd = float(np.diff(mu.phi(xs))[0]) / (2 * h)
    d = float(mu.phi_prime(np.array([x]))[0])
    assert fd == pytest.approx(d, rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("alpha,beta", [(0.5, 1.0), (1.0, 2.0), (2.0, 0.5)])
def test_powerexp_gradient_asymptotics(alpha, beta):
    mu = M.power_exponential(alpha, beta)
    small = np.logspace(-8, -5, 20)
    large = np.logspace(5, 8, 20)
    r0 = mu.grad_phi_abs(small) * small
    r1 = mu.grad_phi_abs(large) / large ** (beta - 1)
    assert np.all((r0 > 0.5 * alpha) & (r0 < 2 * alpha))
    assert np.all((r1 > 0.5 * beta) & (r1 < 2 * beta))


def test_density_integrable_on_compacts():
    for mu in (M.power_weight(-0.5), M.power_exponential(1.5, 0.5), M.distance(0.5)):
        lo = mu.a
        r = M.integrate(one, mu, support=(lo, lo + 0.4))
        assert math.isfinite(r.value) and r.value > 0


def test_specs_round_trip():
    for spec in ("powerexp(alpha=0.5,beta=2)", "power(alpha=2)", "distance(a=0.5,interval=0,1)",
                 "lebesgue(interval=0,1)"):
        assert M.from_spec(spec).spec() == spec
    assert M.from_spec("gaussian").spec() == "powerexp(alpha=0,beta=2)"
    for bad in ("nothing", "power()", "distance(a=1,interval=0)", "powerexp(alpha=1)"):
        with pytest.raises(ConfigError):
            M.from_spec(bad)


def test_bad_parameters():
    with pytest.raises(BadParams):
        M.QuadratureSettings(rel_tol=0)
    with pytest.raises(BadParams):
        M.QuadratureSettings(max_subdivisions=0)
    with pytest.raises(BadParams):
        M.distance(1.0, 0.0, math.inf)
    with pytest.raises(BadParams):
        M.quad(lambda x: x, 1.0, 0.0)
