"""N-functions: built-in families, numeric conjugates and Simonenko indices."""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import _kernels
from ._specstr import bind, fmt, parse_call
from .errors import BracketFailure, ConfigError, DegenerateRatio

CAP = 1e300
"""Evaluations saturate here instead of overflowing to infinity."""

GRID_LO, GRID_HI, GRID_N = 1e-8, 1e8, 2048
INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def default_grid(n=GRID_N, lo=GRID_LO, hi=GRID_HI):
    return np.logspace(np.log10(lo), np.log10(hi), n)


def _cap(v):
    v = np.asarray(v, dtype=float)
    return np.where(np.isnan(v) | (v > CAP), CAP, v)


@dataclass(frozen=True, eq=False)
class NFunction:
    """A Young function with value/derivative evaluators.

    ``value`` and ``derivative`` are vectorized over numpy arrays and clamp at
    :data:`CAP`.  ``log_value`` is optional and used by the modular layer to
    avoid overflow for large arguments.
    """

    value: Callable
    derivative: Callable
    label: str
    analytic_conjugate: Optional["NFunction"] = None
    log_value: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __call__(self, lam):
        return self.value(lam)

    def saturated(self, lam):
        return np.asarray(self.value(lam)) >= CAP

    def __repr__(self):
        return f"NFunction({self.label})"


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def power(p, c=1.0):
    """``c * lam**p``; the conjugate is again of this form."""
    p = float(p)
    c = float(c)
    if p <= 1.0 or c <= 0.0:
        raise ConfigError(f"power family needs p > 1 and c > 0, got p={p}, c={c}")
    label = f"power({fmt(p)})" if c == 1.0 else f"power({fmt(p)},{fmt(c)})"

    def value(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return _cap(c * lam ** p)

    def derivative(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return _cap(c * p * lam ** (p - 1.0))

    def log_value(lam):
        with np.errstate(divide="ignore"):
            return np.log(c) + p * np.log(np.asarray(lam, dtype=float))

    q = p / (p - 1.0)
    cq = (p - 1.0) * c * (c * p) ** (-q)
    conj_label = f"power({fmt(q)},{fmt(cq)})"

    def conj_value(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            return _cap(cq * y ** q)

    def conj_derivative(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            return _cap(cq * q * y ** (q - 1.0))

    def conj_log(y):
        with np.errstate(divide="ignore"):
            return np.log(cq) + q * np.log(np.asarray(y, dtype=float))

    conj = NFunction(conj_value, conj_derivative, conj_label, None, conj_log,
                     {"family": "power", "p": q, "c": cq})
    return NFunction(value, derivative, label, conj, log_value,
                     {"family": "power", "p": p, "c": c})


def powerlog(p, alpha):
    """``lam**p * log(2 + lam)**alpha``."""
    p = float(p)
    alpha = float(alpha)
    if p <= 1.0:
        raise ConfigError("powerlog family needs p > 1")

    def value(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return _cap(lam ** p * np.log(2.0 + lam) ** alpha)

    def derivative(lam):
        lam = np.asarray(lam, dtype=float)
        L = np.log(2.0 + lam)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            d = p * lam ** (p - 1.0) * L ** alpha + alpha * lam ** p * L ** (alpha - 1.0) / (2.0 + lam)
        return _cap(d)

    def log_value(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore"):
            return p * np.log(lam) + alpha * np.log(np.log(2.0 + lam))

    return NFunction(value, derivative, f"powerlog({fmt(p)},{fmt(alpha)})", None, log_value,
                     {"family": "powerlog", "p": p, "alpha": alpha})


def exp_family():
    """``exp(lam) - lam - 1`` with conjugate ``(1+y)log(1+y) - y``."""

    def value(lam):
        lam = np.asarray(lam, dtype=float)
        small = lam < 1e-3
        ls = np.where(small, lam, 0.0)
        series = ls * ls * (0.5 + ls * (1.0 / 6.0 + ls * (1.0 / 24.0 + ls / 120.0)))
        with np.errstate(over="ignore"):
            big = np.expm1(np.where(small, 0.0, lam)) - np.where(small, 0.0, lam)
        return _cap(np.where(small, series, big))

    def derivative(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(over="ignore"):
            return _cap(np.expm1(lam))

    def conj_value(y):
        y = np.asarray(y, dtype=float)
        small = y < 1e-3
        ys = np.where(small, y, 0.0)
        series = ys * ys * (0.5 - ys * (1.0 / 6.0 - ys * (1.0 / 12.0 - ys / 20.0)))
        yb = np.where(small, 1.0, y)
        big = (1.0 + yb) * np.log1p(yb) - yb
        return _cap(np.where(small, series, big))

    def conj_derivative(y):
        return np.log1p(np.asarray(y, dtype=float))

    conj = NFunction(conj_value, conj_derivative, "expconj", None, None, {"family": "expconj"})
    return NFunction(value, derivative, "exp", conj, None, {"family": "exp"})


def from_spec(text):
    """Build a registry family from ``power(p)``, ``powerlog(p,alpha)`` or ``exp``."""
    name, args, kwargs = parse_call(text)
    if name == "power":
        b = bind(name, args, kwargs, ["p", "c"], {"c": 1.0})
        return power(b["p"], b["c"])
    if name == "powerlog":
        b = bind(name, args, kwargs, ["p", "alpha"], {"alpha": 1.0})
        return powerlog(b["p"], b["alpha"])
    if name == "exp":
        bind(name, args, kwargs, [])
        return exp_family()
    raise ConfigError(f"unknown N-function family {name!r}")


# ---------------------------------------------------------------------------
# Numeric Legendre transform
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _bracket_table(m):
    # Wide log grid used only to bracket maximizers; truncated at saturation.
    x = np.logspace(-60.0, 300.0, 16 * 360 + 1)
    mx = np.asarray(m.value(x), dtype=float)
    sat = np.nonzero(mx >= CAP)[0]
    if sat.size:
        stop = sat[0] + 1
        x, mx = x[:stop], mx[:stop]
    return x, mx


def _golden_max(obj, lo, hi, iters=120):
    """Vectorized golden-section maximization of unimodal ``obj`` on [lo, hi]."""
    lo = lo.copy()
    hi = hi.copy()
    c = hi - INVPHI * (hi - lo)
    d = lo + INVPHI * (hi - lo)
    fc = obj(c)
    fd = obj(d)
    for _ in range(iters):
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new = np.where(left, hi - INVPHI * (hi - lo), lo + INVPHI * (hi - lo))
        fnew = obj(new)
        d, fd, c, fc = (np.where(left, c, new), np.where(left, fc, fnew),
                        np.where(left, new, d), np.where(left, fnew, fd))
        if np.all(hi - lo <= 4e-16 * np.maximum(np.abs(hi), 1e-300)):
            break
    cand = np.stack([c, d, 0.5 * (lo + hi)])
    vals = np.stack([fc, fd, obj(0.5 * (lo + hi))])
    k = np.argmax(vals, axis=0)
    idx = np.arange(lo.shape[0])
    return cand[k, idx], vals[k, idx]


def legendre_points(m, y):
    """Return (M*(y), maximizer) for an array of ``y >= 0``.

    The maximizing grid index of ``x*y - M(x)`` on a wide log grid brackets
    the true maximizer (the objective is concave), which is then polished by
    golden-section search.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out_v = np.zeros_like(y)
    out_x = np.zeros_like(y)
    pos = y > 0
    if not np.any(pos):
        return out_v, out_x
    yp = y[pos]
    order = np.argsort(yp, kind="stable")
    ys = yp[order]
    x, mx = _bracket_table(m)
    idx = _kernels.legendre_argmax(x, mx, ys)
    top = idx >= x.shape[0] - 1
    if np.any(top) and mx[-1] < CAP:
        raise BracketFailure(
            f"{m.label}: objective x*y - M(x) still increasing at x={x[-1]:.3g} "
            f"for y={ys[top][0]:.3g}; M grows sub-linearly")
    lo = np.where(idx > 0, x[np.maximum(idx - 1, 0)], 0.0)
    hi = x[np.minimum(idx + 1, x.shape[0] - 1)]

    def obj(t):
        with np.errstate(over="ignore", invalid="ignore"):
            return t * ys - np.asarray(m.value(t), dtype=float)

    xs, vs = _golden_max(obj, lo, hi)
    vs = np.maximum(vs, 0.0)
    res_v = np.empty_like(ys)
    res_x = np.empty_like(ys)
    res_v[order] = vs
    res_x[order] = xs
    out_v[pos] = res_v
    out_x[pos] = res_x
    return out_v, out_x


@dataclass(frozen=True, eq=False)
class _Table:
    y: np.ndarray
    v: np.ndarray
    s: np.ndarray
    refine: np.ndarray  # per cell: Hermite midpoint error above MID_RTOL


MID_RTOL = 1e-8


def _hermite_slope(tab, yq, cell):
    """Derivative of the cubic Hermite interpolant, kept between the end slopes."""
    y0, y1 = tab.y[cell], tab.y[cell + 1]
    h = y1 - y0
    t = (yq - y0) / h
    v0, v1, s0, s1 = tab.v[cell], tab.v[cell + 1], tab.s[cell], tab.s[cell + 1]
    d = (6 * t * t - 6 * t) * (v0 - v1) / h + (3 * t * t - 4 * t + 1) * s0 + (3 * t * t - 2 * t) * s1
    return np.clip(d, s0, s1)


def _exact_in_cells(m, tab, yq, cell):
    """Maximize ``x y - M(x)`` with the maximizer bracketed by the cell's end slopes."""
    lo, hi = tab.s[cell].copy(), tab.s[cell + 1].copy()

    def obj(t):
        with np.errstate(over="ignore", invalid="ignore"):
            return t * yq - np.asarray(m.value(t), dtype=float)

    xs, vs = _golden_max(obj, lo, hi)
    return np.maximum(vs, 0.0), xs


def conjugate(m, grid=None, use_analytic=True):
    """Complementary function ``M*(y) = sup_x [x y - M(x)]``.

    Built-in families return their closed form unless ``use_analytic`` is
    False.  Otherwise ``M*`` is tabulated on ``grid`` (values plus the
    maximizers, which are the slopes of ``M*``) and interpolated between grid
    points; arguments outside the table are maximized directly.  Cells where
    the interpolant misses the exact midpoint value by more than
    :data:`MID_RTOL` (fast growth relative to the grid spacing) are evaluated
    exactly, with the maximizer bracketed by the tabulated slopes.
    """
    if use_analytic and m.analytic_conjugate is not None:
        return m.analytic_conjugate
    grid = default_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    vals, slopes = legendre_points(m, grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    exact_mid = legendre_points(m, mids)[0]
    herm_mid = _kernels.hermite_convex(grid, vals, slopes, mids)
    refine = np.abs(herm_mid - exact_mid) > MID_RTOL * np.maximum(exact_mid, 1e-300)
    tab = _Table(grid, vals, slopes, refine)

    def evaluate(y, want_slope):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        out = np.zeros_like(flat)
        inside = (flat >= tab.y[0]) & (flat <= tab.y[-1])
        if np.any(inside):
            yi = flat[inside]
            cell = np.clip(np.searchsorted(tab.y, yi, side="right") - 1, 0, tab.y.shape[0] - 2)
            if want_slope:
                res = _hermite_slope(tab, yi, cell)
            else:
                res = _kernels.hermite_convex(tab.y, tab.v, tab.s, yi)
            hard = tab.refine[cell]
            if np.any(hard):
                v, x = _exact_in_cells(m, tab, yi[hard], cell[hard])
                res[hard] = x if want_slope else v
            out[inside] = res
        outside = ~inside & (flat > 0)
        if np.any(outside):
            out[outside] = legendre_points(m, flat[outside])[1 if want_slope else 0]
        return out.reshape(y.shape)

    def value(y):
        return _cap(evaluate(y, False))

    def derivative(y):
        return evaluate(y, True)

    return NFunction(value, derivative, f"conj[{m.label}]", None, None,
                     {"family": "numeric_conjugate", "base": m.label, "table": tab})


def young_gap(m, x, y, conj=None):
    """``M(x) + M*(y) - x y`` (nonnegative up to rounding)."""
    conj = conjugate(m) if conj is None else conj
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.asarray(m.value(x)) + np.asarray(conj.value(y)) - x * y


# ---------------------------------------------------------------------------
# Indices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimonenkoIndices:
    """Grid estimates of the best constants in ``d M <= lam M' <= D M``."""

    lower: float
    upper: float
    lower_gt_one: bool = True
    upper_unbounded: bool = False
    saturated: bool = False
    argmin: float = float("nan")
    argmax: float = float("nan")


def _ratio(m, lam):
    v = np.asarray(m.value(lam), dtype=float)
    d = np.asarray(m.derivative(lam), dtype=float)
    return lam * d / v


def _polish(f, lo, hi, sense):
    """Golden-section refinement of an interior extremum in log-lambda."""
    a = np.array([np.log(lo)])
    b = np.array([np.log(hi)])
    sign = 1.0 if sense == "max" else -1.0

    def obj(t):
        return sign * f(np.exp(t))

    t, v = _golden_max(obj, a, b, iters=80)
    return float(np.exp(t[0])), float(sign * v[0])


def simonenko_indices(m, grid=None):
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    vals = np.asarray(m.value(grid), dtype=float)
    if np.any(vals <= 0.0):
        bad = grid[np.nonzero(vals <= 0.0)[0][0]]
        raise DegenerateRatio(f"{m.label} vanishes at lambda={bad:.3g}")
    ok = vals < CAP
    # also exclude points whose derivative saturated
    ok &= np.asarray(m.derivative(grid)) < CAP
    saturated = not bool(np.all(ok))
    lam = grid[ok]
    r = _ratio(m, lam)
    i_max = int(np.argmax(r))
    i_min = int(np.argmin(r))
    upper, at_max = float(r[i_max]), float(lam[i_max])
    lower, at_min = float(r[i_min]), float(lam[i_min])

    def f(t):
        return _ratio(m, t)

    if 0 < i_max < lam.shape[0] - 1:
        x, v = _polish(f, lam[i_max - 1], lam[i_max + 1], "max")
        if v > upper:
            upper, at_max = v, x
    if 0 < i_min < lam.shape[0] - 1:
        x, v = _polish(f, lam[i_min - 1], lam[i_min + 1], "min")
        if v < lower:
            lower, at_min = v, x
    tail = r[-min(16, r.shape[0]):]
    unbounded = saturated or (i_max == lam.shape[0] - 1 and bool(np.all(np.diff(tail) > 0))
                              and tail[-1] > tail[0] * (1 + 1e-6))
    return SimonenkoIndices(lower, upper, lower > 1.0, bool(unbounded), saturated, at_min, at_max)


def scale_bound(idx, a):
    """``max(a**lower, a**upper)``, the dilation bound for ``M(a lam)``."""
    a = float(a)
    return max(a ** idx.lower, a ** idx.upper)


@dataclass(frozen=True)
class Delta2:
    constant: float
    holds: bool


DELTA2_LIMIT = 2.0 ** 64


def delta2_constant(m, grid=None):
    """Grid sup of ``M(2 lam) / M(lam)``; ``holds`` is False past ``2**64``."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    v1 = np.asarray(m.value(grid), dtype=float)
    v2 = np.asarray(m.value(2.0 * grid), dtype=float)
    ok = (v2 < CAP) & (v1 > 0)
    ratio = v2[ok] / v1[ok]
    const = float(ratio.max())
    tail = ratio[-min(16, ratio.shape[0]):]
    growing = bool(np.all(np.diff(tail) >= 0)) and tail[-1] > DELTA2_LIMIT
    holds = not (const > DELTA2_LIMIT or growing or not np.all(ok))
    return Delta2(const, holds)


# ---------------------------------------------------------------------------
# Structural conditions
# ---------------------------------------------------------------------------

def derivative_over_lambda_bounded(m, lo=1e-8, hi=1e-4, tol=1e-3):
    """``M'(lam)/lam`` bounded next to zero, judged by its log-log slope."""
    lam = np.logspace(np.log10(lo), np.log10(hi), 64)
    q = np.asarray(m.derivative(lam), dtype=float) / lam
    if np.any(q <= 0):
        return True
    slope = np.polyfit(np.log(lam), np.log(q), 1)[0]
    return bool(slope >= -tol)


def ratio_over_square_nondecreasing(m, grid=None, tol=1e-9):
    """``M(lam)/lam**2`` nondecreasing on the unsaturated part of the grid."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    v = np.asarray(m.value(grid), dtype=float)
    ok = v < CAP
    g = v[ok] / grid[ok] ** 2
    drops = g[:-1] - g[1:]
    return bool(np.all(drops <= tol * np.abs(g[:-1])))


@dataclass(frozen=True)
class ConditionReport:
    delta2: bool
    derivative_bounded_at_zero: bool
    ratio_over_square_nondecreasing: bool

    @property
    def condition_m(self):
        return self.delta2 and self.derivative_bounded_at_zero


def check_conditions(m):
    """Report condition (M) and the M/lam^2 monotonicity independently."""
    return ConditionReport(delta2_constant(m).holds, derivative_over_lambda_bounded(m),
                           ratio_over_square_nondecreasing(m))


def check_nfunction(m, rtol=1e-5):
    """Audit the N-function invariants; returns a dict of named booleans."""
    lam = default_grid(512)
    v = np.asarray(m.value(lam), dtype=float)
    ok = v < CAP
    lam_ok, v_ok = lam[ok], v[ok]
    out = {"zero_at_zero": float(np.asarray(m.value(0.0))) == 0.0}
    out["nondecreasing"] = bool(np.all(np.diff(v_ok) >= -1e-12 * v_ok[1:]))
    # convexity via second divided differences on a log grid
    x0, x1, x2 = lam_ok[:-2], lam_ok[1:-1], lam_ok[2:]
    s1 = (v_ok[1:-1] - v_ok[:-2]) / (x1 - x0)
    s2 = (v_ok[2:] - v_ok[1:-1]) / (x2 - x1)
    out["convex"] = bool(np.all(s2 - s1 >= -1e-9 * np.abs(s2)))
    out["limit_zero"] = bool(v_ok[0] / lam_ok[0] < 1e-3)
    out["limit_infinity"] = bool(lam_ok[-1] / v_ok[-1] < 1e-3)
    t = np.logspace(-3, 3, 61)
    h = 1e-6 * t
    hi_v = np.asarray(m.value(t + h), dtype=float)
    fd = (hi_v - np.asarray(m.value(t - h))) / (2 * h)
    der = np.asarray(m.derivative(t), dtype=float)
    live = (hi_v < CAP) & (der < CAP)  # saturated points carry no slope information
    out["derivative_consistent"] = bool(np.all(np.abs(fd - der)[live] <= rtol * np.abs(der[live])))
    return out
