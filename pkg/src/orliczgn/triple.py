"""Young triples ``(M, P, Q)`` and the sampled check of ``M(u)/u^2 vw <= M(u) + P(v) + Q(w)``."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from ._specstr import fmt
from .errors import NotEligible
from .nfunc import (CAP, NFunction, check_nfunction, conjugate, delta2_constant, power,
                    powerlog, ratio_over_square_nondecreasing)

SAMPLE_LO, SAMPLE_HI = 1e-4, 1e4


@dataclass(frozen=True, eq=False)
class YoungTriple:
    m: NFunction
    p: NFunction
    q: NFunction
    c: float
    provenance: str  # "MF", "identity" or "explicit"
    f: Optional[NFunction] = None
    meta: dict = field(default_factory=dict)

    @property
    def label(self):
        if self.provenance == "MF":
            return f"MF[{self.m.label}; F={self.f.label}; C={fmt(self.c)}]"
        return f"{self.provenance}[{self.m.label}; P={self.p.label}; Q={self.q.label}]"

    def to_dict(self):
        return {
            "m": self.m.label,
            "p": self.p.label,
            "q": self.q.label,
            "f": None if self.f is None else self.f.label,
            "c": self.c,
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class ViolationReport:
    max_violation: float
    worst: tuple  # (u, v, w) of the largest relative violation
    samples: int
    violations: int

    @property
    def ok(self):
        return self.max_violation <= 1e-9


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _composed(m, inner, c, label):
    """``lam -> c * M(inner(sqrt(lam)))`` with chain-rule derivative."""

    def value(lam):
        lam = np.asarray(lam, dtype=float)
        return np.minimum(c * np.asarray(m.value(inner.value(np.sqrt(lam))), dtype=float), CAP)

    def derivative(lam):
        lam = np.asarray(lam, dtype=float)
        r = np.sqrt(lam)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = c * np.asarray(m.derivative(inner.value(r))) * np.asarray(inner.derivative(r)) / (2 * r)
        return np.minimum(np.nan_to_num(d, nan=0.0), CAP)

    log_value = None
    if m.log_value is not None:
        def log_value(lam):
            lam = np.asarray(lam, dtype=float)
            with np.errstate(divide="ignore"):
                return math.log(c) + np.asarray(m.log_value(inner.value(np.sqrt(lam))))

    return NFunction(value, derivative, label, None, log_value, {"family": "composed"})


def build_mf_triple(m, f, c=None, conj=None, seed=0):
    """``P = C M(F(sqrt l))``, ``Q = C M(F*(sqrt l))``.

    ``c=None`` fits the smallest constant that passes the sampled (Y) check.
    Raises :class:`NotEligible` unless M is Delta_2 with ``M(l)/l^2``
    nondecreasing.
    """
    if not ratio_over_square_nondecreasing(m):
        raise NotEligible(f"{m.label}: M(l)/l^2 decreases on the grid")
    if not delta2_constant(m).holds:
        raise NotEligible(f"{m.label}: Delta_2 fails")
    fstar = conj if conj is not None else (f.analytic_conjugate or conjugate(f))
    if c is None:
        trial = _mf(m, f, fstar, 1.0)
        c = fit_c(trial, seed=seed)
    return _mf(m, f, fstar, float(c))


def _mf(m, f, fstar, c):
    p = _composed(m, f, c, f"{fmt(c)}*{m.label}∘{f.label}(√·)")
    q = _composed(m, fstar, c, f"{fmt(c)}*{m.label}∘{fstar.label}(√·)")
    return YoungTriple(m, p, q, c, "MF", f, {"fstar": fstar})


def identity_triple(m):
    """``P = Q = M`` with ``C = 1``; valid whenever ``M(l)/l^2`` is nondecreasing."""
    if not ratio_over_square_nondecreasing(m):
        raise NotEligible(f"{m.label}: M(l)/l^2 decreases on the grid")
    return YoungTriple(m, m, m, 1.0, "identity")


def explicit_triple(m, p, q):
    """User-supplied ``P``, ``Q``; nothing is checked here."""
    return YoungTriple(m, p, q, 1.0, "explicit")


def power_triple(p, q, c=None, seed=0):
    """The classical choice ``M = l^p``, ``F = l^s/s`` with ``s = 2q/p``.

    Then ``P ~ l^q`` and ``Q ~ l^r`` with ``2/p = 1/q + 1/r``; needs ``q > p/2``.
    """
    s = 2.0 * q / p
    if s <= 1.0:
        raise NotEligible(f"q={q} must exceed p/2={p / 2}")
    return build_mf_triple(power(p), power(s, 1.0 / s), c, seed=seed)


def log_triple(p, alpha, q, beta, c=None, seed=0):
    """``M = l^p log(2+l)^alpha``, ``F = l^s log(2+l)^mu`` with ``s = 2q/p``, ``mu = (beta-alpha)/p``."""
    s = 2.0 * q / p
    mu = (beta - alpha) / p
    return build_mf_triple(powerlog(p, alpha), powerlog(s, mu), c, seed=seed)


def partner_exponent(p, q):
    """``r`` with ``2/p = 1/q + 1/r``."""
    return 1.0 / (2.0 / p - 1.0 / q)


# ---------------------------------------------------------------------------
# Sampled (Y) check and fitting of C
# ---------------------------------------------------------------------------

def _sides(t, u, v, w):
    mu = np.asarray(t.m.value(u), dtype=float)
    lhs = mu / (u * u) * v * w
    rhs = mu + np.asarray(t.p.value(v), dtype=float) + np.asarray(t.q.value(w), dtype=float)
    return lhs, rhs


def sample_points(samples, seed=0, lo=SAMPLE_LO, hi=SAMPLE_HI):
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=(3, int(samples))))


def validate_Y(t, samples=100_000, seed=0, chunk=100_000):
    """Max relative violation ``max(0, LHS - RHS)/RHS`` over log-uniform samples.

    ``worst`` is the sample with the largest ``(LHS - RHS)/RHS``, which is the
    tightest point when nothing is violated.
    """
    u, v, w = sample_points(samples, seed)
    best, where, count = -math.inf, (float("nan"),) * 3, 0
    for s in range(0, u.shape[0], chunk):
        sl = slice(s, s + chunk)
        lhs, rhs = _sides(t, u[sl], v[sl], w[sl])
        rel = (lhs - rhs) / rhs
        count += int(np.count_nonzero(rel > 1e-9))
        i = int(np.argmax(rel))
        if rel[i] > best:
            best, where = float(rel[i]), (float(u[sl][i]), float(v[sl][i]), float(w[sl][i]))
    return ViolationReport(max(best, 0.0), where, int(u.shape[0]), count)


def _needed_c(t, u, v, w):
    # smallest C making the unit-C triple t hold at (u, v, w); 0 where it already holds for C=0
    mu = np.asarray(t.m.value(u), dtype=float)
    excess = mu / (u * u) * v * w - mu
    pq = np.asarray(t.p.value(v), dtype=float) + np.asarray(t.q.value(w), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(excess > 0, excess / pq, 0.0)
    return np.nan_to_num(need, nan=0.0, posinf=CAP)


def fit_c(unit, seed=0, grid_n=48, polish=8, margin=1e-6, lo=SAMPLE_LO, hi=SAMPLE_HI):
    """Smallest C (times ``1 + margin``) with no violation on the fitting sample.

    ``unit`` is the triple with C = 1.  The sample is a dense log grid plus
    random points, with the worst points polished by Nelder-Mead; the
    constant is then located by bisection on the sampled predicate.
    """
    g = np.logspace(math.log10(lo), math.log10(hi), grid_n)
    U, V, W = (a.ravel() for a in np.meshgrid(g, g, g, indexing="ij"))
    ru, rv, rw = sample_points(20_000, seed + 1, lo, hi)
    U, V, W = np.concatenate([U, ru]), np.concatenate([V, rv]), np.concatenate([W, rw])
    need = _needed_c(unit, U, V, W)
    pts = [np.array([U, V, W])]
    bounds = [(math.log(lo), math.log(hi))] * 3
    for i in np.argsort(-need, kind="stable")[:polish]:
        x0 = np.log([U[i], V[i], W[i]])

        def obj(z):
            e = np.exp(np.clip(z, bounds[0][0], bounds[0][1]))
            return -float(_needed_c(unit, e[0:1], e[1:2], e[2:3])[0])

        res = minimize(obj, x0, method="Nelder-Mead", bounds=bounds,
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        pts.append(np.exp(np.clip(res.x, bounds[0][0], bounds[0][1]))[:, None])
    U, V, W = np.concatenate(pts, axis=1)
    need = _needed_c(unit, U, V, W)
    top = float(need.max())
    if top == 0.0:
        return 1e-12

    def holds(c):
        mu = np.asarray(unit.m.value(U), dtype=float)
        lhs = mu / (U * U) * V * W
        rhs = mu + c * (np.asarray(unit.p.value(V)) + np.asarray(unit.q.value(W)))
        return bool(np.all(lhs <= rhs))

    a, b = 0.0, top * 2.0
    while not holds(b):
        b *= 2.0
    while b - a > 1e-12 * b:
        mid = 0.5 * (a + b)
        if holds(mid):
            b = mid
        else:
            a = mid
    return b * (1.0 + margin)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def tail_exponent(fn, lo=1e5, hi=1e7):
    """Log-log slope of ``fn`` between ``lo`` and ``hi``."""
    lam = np.logspace(math.log10(lo), math.log10(hi), 33)
    v = np.asarray(fn.value(lam), dtype=float)
    return float(np.polyfit(np.log(lam), np.log(v), 1)[0])


def pq_are_nfunctions(t):
    """True when P and Q pass the structural N-function audit (no derivative check)."""
    keys = ("zero_at_zero", "nondecreasing", "convex", "limit_zero", "limit_infinity")
    for fn in (t.p, t.q):
        audit = check_nfunction(fn)
        if not all(audit[k] for k in keys):
            return False
    return True
