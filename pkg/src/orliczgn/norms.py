"""Modular functionals and Luxemburg norms over weighted measures."""

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .corpus import TestFunction
from .errors import NotInSpace
from .measure import integrate, integration_rule

K_MAX = 1e12
REL_WIDTH = 1e-10


@dataclass(frozen=True)
class ModularValue:
    value: float
    quadrature_error: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class Channel:
    """``scale * |u^(order)| * (|phi'| if with_grad_phi)`` for a test function.

    ``source`` may also be a plain callable, in which case ``order`` is ignored
    and the support defaults to the whole domain.
    """

    source: object
    order: int = 0
    scale: float = 1.0
    with_grad_phi: bool = False

    def scaled(self, c):
        return replace(self, scale=self.scale * float(c))

    @property
    def fn(self) -> Callable:
        if isinstance(self.source, TestFunction):
            return self.source.derivative(self.order)
        return self.source

    @property
    def support(self):
        return self.source.support if isinstance(self.source, TestFunction) else None

    @property
    def knots(self):
        return self.source.knots if isinstance(self.source, TestFunction) else ()

    def values(self, x, mu):
        v = np.abs(np.asarray(self.fn(x), dtype=float)) * abs(self.scale)
        if self.with_grad_phi:
            v = v * mu.grad_phi_abs(x)
        return v

    @property
    def label(self):
        name = getattr(self.source, "id", None) or getattr(self.source, "__name__", "f")
        tag = ("", "'", "''")[self.order] if isinstance(self.source, TestFunction) else ""
        out = f"{name}{tag}"
        if self.with_grad_phi:
            out = f"|phi'|*{out}"
        return out if self.scale == 1.0 else f"{self.scale:.6g}*{out}"


def channel(tf, order=0, scale=1.0, with_grad_phi=False):
    return Channel(tf, order, float(scale), with_grad_phi)


def _as_channel(f):
    return f if isinstance(f, Channel) else Channel(f)


def _integrand(ch, m, mu):
    if m.log_value is not None:
        def g(x):
            v = ch.values(x, mu)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(v > 0, m.log_value(np.where(v > 0, v, 1.0)), -np.inf)
        return g, True

    def g(x):
        return m.value(ch.values(x, mu))
    return g, False


def modular(f, m, mu, settings=None):
    """``int M(|f|) d(mu)`` for a channel (or a plain callable)."""
    ch = _as_channel(f)
    if ch.scale == 0.0:
        return ModularValue(0.0, 0.0)
    g, log = _integrand(ch, m, mu)
    r = integrate(g, mu, settings, support=ch.support, points=ch.knots, log=log)
    return ModularValue(max(r.value, 0.0), r.error)


def _rule_modular(m, v, w, k):
    if v.shape[0] == 0:
        return 0.0
    return float(np.dot(w, m.value(v / k)))


def luxemburg_norm(f, m, mu, settings=None):
    """``inf{K > 0 : modular(f / K) <= 1}``.

    The bracket starts at ``max(1e-6, modular(f))`` and moves geometrically.
    Bisection runs on a quadrature rule adapted to ``f / K`` near the answer,
    and the final value is confirmed by a fresh adaptive quadrature so that
    ``modular(f / norm) <= 1`` holds for the returned value.
    """
    ch = _as_channel(f)
    base = modular(ch, m, mu, settings).value
    if base == 0.0:
        return 0.0

    def full(k):
        return modular(ch.scaled(1.0 / k), m, mu, settings).value

    lo = hi = max(1e-6, base)
    if hi > K_MAX:
        if full(K_MAX) > 1.0:
            raise NotInSpace(f"no K <= {K_MAX:g} brings the modular below 1")
        lo = hi = K_MAX
    if full(hi) > 1.0:
        while True:
            lo, hi = hi, hi * 2.0
            if hi > K_MAX:
                raise NotInSpace(f"no K <= {K_MAX:g} brings the modular below 1")
            if full(hi) <= 1.0:
                break
    else:
        while True:
            lo, hi = lo * 0.5, lo
            if full(lo) > 1.0 or lo < 1e-300:
                break

    for _ in range(4):
        k_mid = math.sqrt(lo * hi)
        probe = ch.scaled(1.0 / k_mid)
        g, log = _integrand(probe, m, mu)
        x, w = integration_rule(g, mu, settings, support=ch.support, points=ch.knots, log=log)
        v = ch.values(x, mu)
        a, b = lo, hi
        while b - a > 1e-3 * REL_WIDTH * b:
            c = 0.5 * (a + b)
            if _rule_modular(m, v, w, c) > 1.0:
                a = c
            else:
                b = c
        k = b
        # confirm with an independent adaptive pass; widen until it agrees
        step = REL_WIDTH
        for _ in range(60):
            if full(k) <= 1.0:
                break
            k *= 1.0 + step
            step *= 2.0
        if full(k * (1.0 - REL_WIDTH)) > 1.0:
            return k
        hi = k
    return k


def luxemburg_modular_gap(f, m, mu, settings=None):
    """``modular(f / ||f||)``; equals 1 for Delta_2 functions with nonzero f."""
    n = luxemburg_norm(f, m, mu, settings)
    if n == 0.0:
        return 0.0
    return modular(_as_channel(f).scaled(1.0 / n), m, mu, settings).value
