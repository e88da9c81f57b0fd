"""Weighted measures ``exp(-phi(x)) dx`` on intervals and adaptive quadrature."""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from ._specstr import bind, fmt, parse_call
from .errors import BadParams, ConfigError, NonConvergent, OutOfDomain

_NODES = _kernels.GK_NODES


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise BadParams("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise BadParams("max_subdivisions must be >= 1")


DEFAULT_SETTINGS = QuadratureSettings()


class QuadResult(NamedTuple):
    value: float
    error: float


# ---------------------------------------------------------------------------
# Core adaptive Gauss-Kronrod on a finite parameter interval
# ---------------------------------------------------------------------------

def _adaptive(g, breaks, s, panels=False):
    """Globally adaptive G7/K15 on the panels delimited by ``breaks``.

    ``g`` maps an array of parameter values to integrand values (already
    including any Jacobian).  Panels with the largest error estimates are
    bisected in batches; panels are kept in positional order so the final
    pairwise sum is deterministic.
    """
    lo = np.asarray(breaks[:-1], dtype=float)
    hi = np.asarray(breaks[1:], dtype=float)
    vals, errs = _eval_panels(g, lo, hi)
    while True:
        total = _kernels.pairwise_sum(vals)
        err = _kernels.pairwise_sum(errs)
        tol = max(s.abs_tol, s.rel_tol * abs(total))
        if err <= tol:
            res = QuadResult(total, err)
            return (res, lo, hi) if panels else res
        n = lo.shape[0]
        width = hi - lo
        splittable = width > 8 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))
        splittable &= width > 1e-300
        cand = errs * splittable
        stuck = (~splittable) & (errs > 0.1 * tol)
        if np.any(stuck) or not np.any(cand > 0) or n >= s.max_subdivisions:
            raise NonConvergent(
                f"quadrature error {err:.3g} exceeds budget {tol:.3g} after {n} panels",
                value=total, error=err)
        pick = cand >= 0.1 * cand.max()
        room = s.max_subdivisions - n
        idx = np.nonzero(pick)[0]
        if idx.shape[0] > room:
            idx = idx[np.argsort(-cand[idx], kind="stable")[:room]]
            pick = np.zeros(n, dtype=bool)
            pick[idx] = True
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, ne = _eval_panels(g, new_lo, new_hi)
        lo = np.concatenate([lo[~pick], new_lo])
        hi = np.concatenate([hi[~pick], new_hi])
        vals = np.concatenate([vals[~pick], nv])
        errs = np.concatenate([errs[~pick], ne])
        order = np.argsort(lo, kind="stable")
        lo, hi, vals, errs = lo[order], hi[order], vals[order], errs[order]


def _eval_panels(g, lo, hi):
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)
    x = center[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(g(x.ravel()), dtype=float).reshape(x.shape)
    if np.any(np.isnan(fx)):
        raise NonConvergent("integrand returned NaN")
    if np.any(np.isinf(fx)):
        raise NonConvergent("integrand returned an infinite value")
    return _kernels.gk_reduce(fx, half)


def _segments(a, b, pts, left_power):
    """Split (a, b) into pieces ``(xmap, jac, breaks)`` over parameter intervals."""
    if math.isinf(a) and math.isinf(b):
        c = pts[len(pts) // 2] if pts else 0.0
        return (_segments(a, c, [p for p in pts if p < c], 1)
                + _segments(c, b, [p for p in pts if p > c], 1))
    if math.isinf(b):
        def xmap(t):
            return a + t / (1.0 - t)

        def jac(t):
            return 1.0 / (1.0 - t) ** 2
        br = [0.0] + [(p - a) / (1.0 + p - a) for p in pts] + [1.0]
        return [(xmap, jac, br)]
    if math.isinf(a):
        def xmap(t):
            return b - t / (1.0 - t)

        def jac(t):
            return 1.0 / (1.0 - t) ** 2
        br = [0.0] + sorted((b - p) / (1.0 + b - p) for p in pts) + [1.0]
        return [(xmap, jac, br)]
    if left_power != 1:
        m = float(left_power)
        h = b - a

        def xmap(t):
            return a + h * t ** m

        def jac(t):
            return h * m * t ** (m - 1.0)
        br = [0.0] + [((p - a) / h) ** (1.0 / m) for p in pts] + [1.0]
        return [(xmap, jac, br)]
    return [(None, None, [a] + pts + [b])]


def _pulled_back(f, xmap, jac):
    if xmap is None:
        return f

    def g(t):
        return f(xmap(t)) * jac(t)
    return g


def _check_interval(a, b):
    if not a < b and a != b:
        raise BadParams(f"quad needs a < b, got ({a}, {b})")


def quad(f, a, b, settings=None, points=(), left_power=1):
    """Integrate ``f`` over (a, b) with respect to Lebesgue measure.

    Infinite ends are mapped onto (0, 1) by ``x = a + t/(1-t)`` (mirrored at
    minus infinity).  ``points`` are interior breakpoints where the panels are
    forced to split.  ``left_power = m > 1`` substitutes ``x = a + (b-a) t**m``
    on a finite interval, which removes algebraic singularities at ``a``.
    """
    s = settings or DEFAULT_SETTINGS
    a, b = float(a), float(b)
    _check_interval(a, b)
    if a == b:
        return QuadResult(0.0, 0.0)
    pts = sorted(float(p) for p in points if a < p < b)
    value = error = 0.0
    for xmap, jac, br in _segments(a, b, pts, left_power):
        r = _adaptive(_pulled_back(f, xmap, jac), br, s)
        value += r.value
        error += r.error
    return QuadResult(value, error)


def quad_rule(f, a, b, settings=None, points=()):
    """Adapt panels to ``f`` and return the resulting rule ``(x, w)``.

    ``sum(w * h(x))`` then approximates the integral of any ``h`` shaped like
    ``f``; the Luxemburg bisection reuses one rule across many scalings.
    """
    s = settings or DEFAULT_SETTINGS
    a, b = float(a), float(b)
    _check_interval(a, b)
    xs, ws = [], []
    if a == b:
        return np.zeros(0), np.zeros(0)
    pts = sorted(float(p) for p in points if a < p < b)
    for xmap, jac, br in _segments(a, b, pts, 1):
        _, lo, hi = _adaptive(_pulled_back(f, xmap, jac), br, s, panels=True)
        half = 0.5 * (hi - lo)
        t = (0.5 * (hi + lo))[:, None] + half[:, None] * _NODES[None, :]
        w = half[:, None] * _kernels.GK_WEIGHTS_K[None, :]
        if xmap is not None:
            w = w * jac(t)
            t = xmap(t)
        xs.append(t.ravel())
        ws.append(w.ravel())
    return np.concatenate(xs), np.concatenate(ws)


# ---------------------------------------------------------------------------
# Weighted measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightedMeasure:
    """``mu(dx) = exp(-phi(x)) dx`` on the open interval (a, b)."""

    a: float
    b: float
    phi: Callable
    phi_prime: Callable
    family: str = "custom"
    params: dict = field(default_factory=dict)
    breakpoints: tuple = ()

    @property
    def domain(self):
        return (self.a, self.b)

    def density(self, x):
        with np.errstate(over="ignore"):
            return np.exp(-np.asarray(self.phi(x), dtype=float))

    def grad_phi_abs(self, x):
        return np.abs(np.asarray(self.phi_prime(x), dtype=float))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x > self.a) & (x < self.b)

    def spec(self):
        """Canonical family specification string."""
        p = self.params
        if self.family == "lebesgue":
            return f"lebesgue(interval={fmt(self.a)},{fmt(self.b)})"
        if self.family == "power":
            return f"power(alpha={fmt(p['alpha'])})"
        if self.family == "power_exponential":
            return f"powerexp(alpha={fmt(p['alpha'])},beta={fmt(p['beta'])})"
        if self.family == "distance":
            return f"distance(a={fmt(p['a'])},interval={fmt(self.a)},{fmt(self.b)})"
        return "custom"

    @property
    def label(self):
        return self.spec()


def lebesgue(a=-math.inf, b=math.inf):
    def phi(x):
        return np.zeros_like(np.asarray(x, dtype=float))
    return WeightedMeasure(float(a), float(b), phi, phi, "lebesgue", {})


def power_weight(alpha):
    """``x**alpha dx`` on (0, inf); ``phi = -alpha log x``."""
    alpha = float(alpha)

    def phi(x):
        return -alpha * np.log(np.asarray(x, dtype=float))

    def phi_prime(x):
        return -alpha / np.asarray(x, dtype=float)

    return WeightedMeasure(0.0, math.inf, phi, phi_prime, "power", {"alpha": alpha})


def power_exponential(alpha, beta):
    """``x**alpha exp(-x**beta) dx`` on (0, inf)."""
    alpha = float(alpha)
    beta = float(beta)
    if alpha < 0 or beta <= 0:
        raise BadParams("power_exponential needs alpha >= 0 and beta > 0")

    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return (-alpha * np.log(x) if alpha else 0.0) + x ** beta

    def phi_prime(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return (-alpha / x if alpha else 0.0) + beta * x ** (beta - 1.0)

    return WeightedMeasure(0.0, math.inf, phi, phi_prime, "power_exponential",
                           {"alpha": alpha, "beta": beta})


def gaussian():
    return power_exponential(0.0, 2.0)


def distance(a_exp, lo=0.0, hi=1.0):
    """``delta(x)**a dx`` on (lo, hi) with ``delta`` the distance to the boundary.

    ``phi = -a log delta`` is Lipschitz away from the boundary; its derivative
    jumps at the midpoint, which is always a quadrature breakpoint.
    """
    a_exp = float(a_exp)
    lo = float(lo)
    hi = float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise BadParams("distance weight needs a bounded interval")
    mid = 0.5 * (lo + hi)

    def delta(x):
        x = np.asarray(x, dtype=float)
        return np.minimum(x - lo, hi - x)

    def phi(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return -a_exp * np.log(delta(x))

    def phi_prime(x):
        x = np.asarray(x, dtype=float)
        sign = np.where(x < mid, 1.0, -1.0)
        with np.errstate(divide="ignore"):
            return -a_exp * sign / delta(x)

    return WeightedMeasure(lo, hi, phi, phi_prime, "distance", {"a": a_exp}, (mid,))


def custom(phi, phi_prime, a, b, breakpoints=()):
    return WeightedMeasure(float(a), float(b), phi, phi_prime, "custom", {}, tuple(breakpoints))


def from_spec(text):
    """Parse ``powerexp(alpha=0,beta=2)``, ``distance(a=0.5,interval=0,1)``, ..."""
    name, args, kwargs = parse_call(text)
    if name in ("powerexp", "power_exponential"):
        b = bind(name, args, kwargs, ["alpha", "beta"])
        return power_exponential(b["alpha"], b["beta"])
    if name == "gaussian":
        bind(name, args, kwargs, [])
        return gaussian()
    if name == "power":
        b = bind(name, args, kwargs, ["alpha"])
        return power_weight(b["alpha"])
    if name in ("distance", "lebesgue"):
        names = ["a", "interval"] if name == "distance" else ["interval"]
        b = bind(name, args, kwargs, names, {"interval": (0.0, 1.0) if name == "distance"
                                             else (-math.inf, math.inf)})
        iv = b["interval"]
        if not (isinstance(iv, tuple) and len(iv) == 2):
            raise ConfigError(f"{name}: interval must be 'lo,hi'")
        if name == "distance":
            return distance(b["a"], iv[0], iv[1])
        return lebesgue(iv[0], iv[1])
    raise ConfigError(f"unknown measure family {name!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def weight_at(mu, x):
    """``(exp(-phi(x)), |phi'(x)|)`` at an interior point."""
    x = float(x)
    if not (mu.a < x < mu.b):
        raise OutOfDomain(f"x={x} outside ({mu.a}, {mu.b})")
    return float(mu.density(x)), float(mu.grad_phi_abs(x))


def _range(mu, support, points):
    lo, hi = mu.a, mu.b
    if support is not None:
        lo, hi = max(lo, support[0]), min(hi, support[1])
    return lo, hi, tuple(points) + tuple(mu.breakpoints)


def _against(integrand, mu, log):
    if log:
        def g(x):
            with np.errstate(over="ignore", invalid="ignore"):
                lv = np.asarray(integrand(x), dtype=float) - np.asarray(mu.phi(x), dtype=float)
            return np.where(np.isneginf(lv), 0.0, np.exp(np.minimum(lv, 709.0)))
    else:
        def g(x):
            fx = np.asarray(integrand(x), dtype=float)
            dens = mu.density(x)
            with np.errstate(invalid="ignore", over="ignore"):
                return np.where(fx == 0.0, 0.0, fx * dens)
    return g


def integrate(integrand, mu, settings=None, support=None, points=(), log=False):
    """``int integrand d(mu)`` with an error estimate.

    ``support`` restricts the range (e.g. to a test function's support).
    With ``log=True`` the integrand returns ``log`` values and the density is
    folded in before exponentiation, which avoids overflow of large modular
    arguments against small densities.
    """
    lo, hi, pts = _range(mu, support, points)
    if not lo < hi:
        return QuadResult(0.0, 0.0)
    return quad(_against(integrand, mu, log), lo, hi, settings, pts)


def integration_rule(integrand, mu, settings=None, support=None, points=(), log=False):
    """Nodes ``x`` and weights ``w`` (density included) adapted to ``integrand``."""
    lo, hi, pts = _range(mu, support, points)
    if not lo < hi:
        return np.zeros(0), np.zeros(0)
    x, w = quad_rule(_against(integrand, mu, log), lo, hi, settings, pts)
    return x, w * mu.density(x)
