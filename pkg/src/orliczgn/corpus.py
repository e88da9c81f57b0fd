"""Deterministic library of test functions with closed-form derivatives."""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._specstr import fmt
from .errors import BadParams


@dataclass(frozen=True, eq=False)
class TestFunction:
    """``u`` with analytic ``u1 = u'`` and ``u2 = u''``, zero outside ``support``."""

    __test__ = False  # not a pytest class

    u: Callable
    u1: Callable
    u2: Callable
    support: tuple
    family: str
    params: dict = field(default_factory=dict)
    id: str = ""
    compact: bool = True
    knots: tuple = ()

    def __call__(self, x):
        return self.u(x)

    def derivative(self, order):
        return (self.u, self.u1, self.u2)[order]


def _masked(fn, lo, hi):
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        inside = (x > lo) & (x < hi)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = fn(x[inside])
        return out
    return wrapped


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

def bump(a, b):
    """``exp(-1/((x-a)(b-x)))`` on (a, b)."""
    a, b = float(a), float(b)
    if not a < b:
        raise BadParams("bump needs a < b")

    def parts(x):
        g = (x - a) * (b - x)
        g1 = a + b - 2.0 * x
        with np.errstate(under="ignore"):
            u = np.exp(-1.0 / g)
        return g, g1, u

    def u(x):
        return parts(x)[2]

    def u1(x):
        g, g1, u = parts(x)
        live = u > 0  # exp(-1/g) underflows before 1/g**4 overflows
        g = np.where(live, g, 1.0)
        return np.where(live, u * g1 / g ** 2, 0.0)

    def u2(x):
        g, g1, u = parts(x)
        live = u > 0
        g = np.where(live, g, 1.0)
        return np.where(live, u * (g1 ** 2 / g ** 4 - 2.0 / g ** 2 - 2.0 * g1 ** 2 / g ** 3), 0.0)

    return TestFunction(_masked(u, a, b), _masked(u1, a, b), _masked(u2, a, b), (a, b),
                        "bump", {"a": a, "b": b}, f"bump({fmt(a)},{fmt(b)})")


def poly_spline(center, width):
    """Cubic B-spline (C^2, piecewise cubic) on ``center +- 2 width``."""
    c, h = float(center), float(width)
    if h <= 0:
        raise BadParams("poly_spline needs width > 0")

    def u(x):
        t = np.abs((x - c) / h)
        return np.where(t < 1.0, 2.0 / 3.0 - t ** 2 + 0.5 * t ** 3, (2.0 - t) ** 3 / 6.0)

    def u1(x):
        t = (x - c) / h
        at = np.abs(t)
        d = np.where(at < 1.0, -2.0 * t + 1.5 * t * at, -np.sign(t) * (2.0 - at) ** 2 / 2.0)
        return d / h

    def u2(x):
        at = np.abs((x - c) / h)
        d = np.where(at < 1.0, -2.0 + 3.0 * at, 2.0 - at)
        return d / h ** 2

    lo, hi = c - 2 * h, c + 2 * h
    return TestFunction(_masked(u, lo, hi), _masked(u1, lo, hi), _masked(u2, lo, hi), (lo, hi),
                        "poly_spline", {"center": c, "width": h}, f"spline({fmt(c)},{fmt(h)})",
                        knots=(c - h, c, c + h))


def hermite_decay(k):
    """``x**k exp(-x)`` on (0, inf); not compactly supported."""
    k = float(k)
    if k < 1:
        raise BadParams("hermite_decay needs k >= 1 so that u(0) = 0")

    def u(x):
        return x ** k * np.exp(-x)

    def u1(x):
        return (k * x ** (k - 1) - x ** k) * np.exp(-x)

    def u2(x):
        return (k * (k - 1) * x ** (k - 2) - 2 * k * x ** (k - 1) + x ** k) * np.exp(-x)

    return TestFunction(_masked(u, 0.0, math.inf), _masked(u1, 0.0, math.inf),
                        _masked(u2, 0.0, math.inf), (0.0, math.inf), "hermite_decay",
                        {"k": k}, f"hermite({fmt(k)})", compact=False)


def _smoothstep(z):
    """C-infinity step: 0 for z <= 0, 1 for z >= 1, with first two derivatives."""
    z = np.asarray(z, dtype=float)
    zi = np.clip(z, 2e-3, 1.0 - 2e-3)
    with np.errstate(over="ignore", under="ignore"):
        ea = np.exp(-1.0 / zi)
        eb = np.exp(-1.0 / (1.0 - zi))
    s = ea + eb
    f = ea / s
    # derivatives of ea, eb
    da = ea / zi ** 2
    db = -eb / (1.0 - zi) ** 2
    dda = ea * (1.0 / zi ** 4 - 2.0 / zi ** 3)
    ddb = eb * (1.0 / (1.0 - zi) ** 4 - 2.0 / (1.0 - zi) ** 3)
    ds = da + db
    dds = dda + ddb
    f1 = (da * s - ea * ds) / s ** 2
    f2 = (dda * s - ea * dds) / s ** 2 - 2.0 * ds * (da * s - ea * ds) / s ** 3
    inside = (z > 0) & (z < 1)
    f = np.where(z >= 1, 1.0, np.where(inside, f, 0.0))
    f1 = np.where(inside, f1, 0.0)
    f2 = np.where(inside, f2, 0.0)
    return f, f1, f2


def power_cutoff(sigma, eps, plateau=12.0, cut=1.0, side="left"):
    """Near-extremal Hardy profile built in the variable ``s = log t``.

    ``side="left"``: ``u = t**(sigma+eps)`` for ``log t < -plateau``, exponent
    ``sigma`` on ``[-plateau, -cut]`` and a smooth cutoff reaching zero at
    ``t = 1``; support ``(0, 1)``.  ``side="right"`` is the mirror image
    ``t -> 1/t`` with exponent ``sigma - eps``, supported on ``(1, inf)``.
    """
    sigma, eps, plateau, cut = float(sigma), float(eps), float(plateau), float(cut)
    if eps <= 0 or plateau <= cut or cut <= 0:
        raise BadParams("power_cutoff needs eps > 0 and plateau > cut > 0")
    sgn = 1.0 if side == "left" else -1.0
    if side not in ("left", "right"):
        raise BadParams("side must be 'left' or 'right'")
    lead = sigma + sgn * eps

    def profile(x):
        # U(s) = exp(G(s)) * H(s) with r = sgn*s measured toward the cutoff.
        s = np.log(x)
        r = sgn * s
        # exponent lead for r < -plateau, sigma on the plateau: G' = lead - sgn*eps*w
        w, w1, w2 = _smoothstep(r + plateau)
        # G(s) = lead*s - eps * W(r) with W' = w; W(r) = integral of the step
        W = _step_integral(r + plateau)
        G = lead * s - eps * W
        G1 = lead - eps * sgn * w
        G2 = -eps * w1
        h, h1, h2 = _smoothstep((-r) / cut)
        h1 = h1 * (-sgn / cut)
        h2 = h2 / cut ** 2
        eG = np.exp(G)
        U = eG * h
        U1 = eG * (G1 * h + h1)
        U2 = eG * ((G2 + G1 ** 2) * h + 2.0 * G1 * h1 + h2)
        return U, U1, U2

    def u(x):
        return profile(x)[0]

    def u1(x):
        _, U1, _ = profile(x)
        return U1 / x

    def u2(x):
        _, U1, U2 = profile(x)
        return (U2 - U1) / x ** 2

    lo, hi = (0.0, 1.0) if side == "left" else (1.0, math.inf)
    return TestFunction(_masked(u, lo, hi), _masked(u1, lo, hi), _masked(u2, lo, hi), (lo, hi),
                        "power_cutoff", {"sigma": sigma, "eps": eps, "plateau": plateau,
                                         "cut": cut, "side": side},
                        f"power_cutoff({fmt(sigma)},{fmt(eps)},{side})")


def _step_integral(z):
    """Integral from -inf to z of the smooth step."""
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 1.0, z - 1.0 + _STEP_MASS, 0.0)
    inside = (z > 0) & (z < 1)
    if np.any(inside):
        out = out.copy()
        out[inside] = _STEP_ANTI(z[inside])
    return out


def _build_step_antiderivative(n=4001):
    # Antiderivative of the cubic Hermite interpolant of the step (O(h^4) accurate).
    z = np.linspace(0.0, 1.0, n)
    f, f1, _ = _smoothstep(z)
    return CubicHermiteSpline(z, f, f1).antiderivative()


_STEP_ANTI = _build_step_antiderivative()
_STEP_MASS = 0.5  # f(z) + f(1-z) = 1, so the step integrates to 1/2 over [0, 1]


# ---------------------------------------------------------------------------
# Transformations
# ---------------------------------------------------------------------------

def dilate(tf, c, center=0.0):
    """``x -> u(center + c (x - center))``; derivatives pick up ``c`` and ``c**2``."""
    c, x0 = float(c), float(center)
    if c <= 0:
        raise BadParams("dilation factor must be positive")

    def arg(x):
        return x0 + c * (np.asarray(x, dtype=float) - x0)

    def u(x):
        return tf.u(arg(x))

    def u1(x):
        return c * tf.u1(arg(x))

    def u2(x):
        return c * c * tf.u2(arg(x))

    lo, hi = tf.support
    sup = (x0 + (lo - x0) / c, x0 + (hi - x0) / c)
    suffix = f"·dilate{fmt(c)}" if x0 == 0 else f"·dilate{fmt(c)}@{fmt(x0)}"
    return TestFunction(u, u1, u2, sup, tf.family, dict(tf.params, dilation=c, center=x0),
                        tf.id + suffix, tf.compact,
                        tuple(x0 + (k - x0) / c for k in tf.knots))


def taper(tf, width):
    """Multiply a decaying member by the bump on (0, width) to make it compactly supported."""
    b = bump(0.0, width)
    # normalize the bump so it is ~1 in the middle of its support
    scale = 1.0 / float(b.u(np.array([0.5 * width]))[0])

    def u(x):
        return tf.u(x) * b.u(x) * scale

    def u1(x):
        return (tf.u1(x) * b.u(x) + tf.u(x) * b.u1(x)) * scale

    def u2(x):
        return (tf.u2(x) * b.u(x) + 2 * tf.u1(x) * b.u1(x) + tf.u(x) * b.u2(x)) * scale

    return TestFunction(u, u1, u2, (0.0, float(width)), tf.family,
                        dict(tf.params, taper=width), tf.id + f"·taper{fmt(width)}",
                        knots=tf.knots)


def zero_function():
    def z(x):
        return np.zeros_like(np.asarray(x, dtype=float))
    return TestFunction(z, z, z, (0.0, 0.0), "zero", {}, "zero")


def make(family, **params):
    """Construct a corpus member by family name."""
    try:
        if family == "bump":
            return bump(params["a"], params["b"])
        if family == "poly_spline":
            return poly_spline(params["center"], params["width"])
        if family == "hermite_decay":
            return hermite_decay(params["k"])
        if family == "power_cutoff":
            return power_cutoff(**params)
    except KeyError as exc:
        raise BadParams(f"{family}: missing parameter {exc}") from None
    raise BadParams(f"unknown test function family {family!r}")


# ---------------------------------------------------------------------------
# Default corpus
# ---------------------------------------------------------------------------

DILATIONS = (0.5, 1.0, 2.0, 4.0)


def _admissible(tf, lo, hi):
    a, b = tf.support
    return lo <= a and b <= hi and (tf.compact or (a == lo and b == hi))


def default_corpus(domain, strict=False):
    """At least 12 admissible members for ``domain = (lo, hi)``.

    Bounded domains get bumps and splines dilated about the midpoint; the half
    line gets pure dilations plus ``hermite_decay`` members (dropped when
    ``strict``, which keeps only compactly supported functions).
    """
    lo, hi = float(domain[0]), float(domain[1])
    members = []
    if math.isfinite(lo) and math.isfinite(hi):
        L = hi - lo
        mid = 0.5 * (lo + hi)
        bases = [bump(lo + 0.1 * L, hi - 0.1 * L), bump(lo + 0.05 * L, lo + 0.55 * L),
                 bump(lo + 0.4 * L, hi - 0.05 * L),
                 poly_spline(mid, 0.2 * L), poly_spline(lo + 0.3 * L, 0.1 * L)]
        for base in bases:
            for c in DILATIONS:
                tf = base if c == 1.0 else dilate(base, c, mid)
                if _admissible(tf, lo, hi):
                    members.append(tf)
    elif lo == 0.0 and math.isinf(hi):
        bases = [bump(0.5, 1.5), bump(0.2, 2.0), bump(1.0, 3.0),
                 poly_spline(1.0, 0.4), poly_spline(2.0, 0.5)]
        for base in bases:
            for c in DILATIONS:
                members.append(base if c == 1.0 else dilate(base, c))
        if not strict:
            members += [hermite_decay(2), hermite_decay(3), dilate(hermite_decay(2), 2.0)]
    elif math.isinf(lo) and math.isinf(hi):
        bases = [bump(-1.0, 1.0), bump(0.0, 2.0), bump(-2.5, 0.5),
                 poly_spline(0.0, 0.5), poly_spline(1.0, 0.3)]
        for base in bases:
            for c in DILATIONS:
                members.append(base if c == 1.0 else dilate(base, c))
    else:
        raise BadParams(f"unsupported domain {domain}")
    return members
