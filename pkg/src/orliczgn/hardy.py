"""Hardy-type inequalities: the Muckenhoupt criterion, the classical power-weight
constant, power-exponential asymptotics and fitted constants for the Hardy
conditions with and without a remainder term."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels, corpus
from .errors import DivisionByZero, NonConvergent
from .measure import DEFAULT_SETTINGS, QuadratureSettings, quad
from .norms import Channel, modular

# ---------------------------------------------------------------------------
# Muckenhoupt criterion
# ---------------------------------------------------------------------------

R_MIN = 1e-6
GRID_POINTS = 181
SLOPE_TOL = 0.05
DIVERGENCE_TOL = 0.02


@dataclass(frozen=True)
class MuckenhouptReport:
    sup_value: float
    sup_location: float
    finite: bool
    a_tail_exponent: float
    b_tail_exponent: float
    reason: str = ""
    grid_limited: bool = False
    r: tuple = ()
    product: tuple = ()

    def row(self):
        return {
            "verdict": "finite" if self.finite else "infinite",
            "sup": self.sup_value,
            "r_star": self.sup_location,
            "a_tail_exponent": self.a_tail_exponent,
            "b_tail_exponent": self.b_tail_exponent,
            "reason": self.reason,
            "grid_limited": self.grid_limited,
        }


def _r_max(mu):
    if mu.family == "power_exponential":
        return 400.0 ** (1.0 / mu.params["beta"])
    if mu.family in ("power", "lebesgue"):
        return 1e6
    return 1e4


def _log_tail(f, lo, settings):
    """``log int_lo^inf f`` computed with ``x = lo e^s``; ``-inf`` for a zero integral."""
    def g(s):
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            x = lo * np.exp(s)
            v = np.asarray(f(x), dtype=float) * x
        return np.where(np.isfinite(x), v, 0.0)
    r = quad(g, 0.0, math.inf, settings)
    return math.log(r.value) if r.value > 0 else -math.inf


def _singular_exponent(g, x0):
    """Slope of ``log(x g(x))`` against ``log x`` on ``[x0 1e-6, x0]``."""
    xs = x0 * np.logspace(-6.0, 0.0, 13)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        y = np.log(xs * np.asarray(g(xs), dtype=float))
    if not np.all(np.isfinite(y)):
        return -math.inf if np.any(y == math.inf) else math.inf
    return float(np.polyfit(np.log(xs), y, 1)[0])


def muckenhoupt_check(mu, p, nu="default", settings=None, points=GRID_POINTS):
    """Grid sup of ``A(r)**(1/p) * B(r)**((p-1)/p)`` over ``r`` in ``[1e-6, R_max]``.

    ``A(r) = int_r^inf dnu`` with ``dnu = |phi'|^p e^{-phi} dx`` (``nu="default"``)
    or ``dnu = x^{-p} e^{-phi} dx`` (``nu="classical"``, the Hardy operator form
    on power weights); ``B(r) = int_0^r e^{phi/(p-1)} dx``.  Both are built
    cumulatively in log space from per-panel integrals scaled by ``e^{-phi}``
    at the panel edge, so large exponents never overflow.
    """
    s = settings or DEFAULT_SETTINGS
    p = float(p)
    k = 1.0 / (p - 1.0)
    r_max = _r_max(mu)
    r = np.logspace(math.log10(R_MIN), math.log10(r_max), points)
    phi = mu.phi

    if nu == "classical":
        def nu_factor(x):
            return x ** (-p)
    else:
        def nu_factor(x):
            return mu.grad_phi_abs(x) ** p

    def ph(x):
        return float(np.asarray(phi(np.array([x])))[0])

    # B near zero: divergence test, then a graded quadrature of the first piece
    def b_density(x):
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(phi(x), dtype=float) * k)

    slope = _singular_exponent(b_density, r[0])
    if slope <= DIVERGENCE_TOL:
        return MuckenhouptReport(math.inf, 0.0, False, math.nan, math.nan,
                                 "B(r) diverges at 0", _grid_limited(mu))
    grade = min(64, max(1, math.ceil(2.0 / slope)))
    c0 = ph(r[0]) * k

    def b0(x):
        return np.exp(np.asarray(phi(x), dtype=float) * k - c0)
    try:
        first = quad(b0, 0.0, r[0], s, left_power=grade).value
    except NonConvergent:
        return MuckenhouptReport(math.inf, 0.0, False, math.nan, math.nan,
                                 "B(r) quadrature fails at 0", _grid_limited(mu))

    log_b = np.empty_like(r)
    log_b[0] = math.log(first) + c0
    for j in range(1, r.shape[0]):
        cj = max(ph(r[j - 1]), ph(r[j])) * k

        def bj(x, cj=cj):
            return np.exp(np.asarray(phi(x), dtype=float) * k - cj)
        piece = quad(bj, r[j - 1], r[j], s).value
        log_b[j] = np.logaddexp(log_b[j - 1], math.log(piece) + cj if piece > 0 else -math.inf)

    # A from the right end: tail beyond R_max, then panels leftward
    def a_density(x, c):
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            e = np.exp(c - np.asarray(phi(x), dtype=float))
            return np.where(e == 0.0, 0.0, nu_factor(x) * e)

    c_end = ph(r[-1])
    try:
        tail = _log_tail(lambda x: a_density(x, c_end), r[-1], s) - c_end
    except NonConvergent:
        return MuckenhouptReport(math.inf, r[-1], False, math.nan, math.nan,
                                 "A(r) diverges at infinity", _grid_limited(mu))
    log_a = np.empty_like(r)
    log_a[-1] = tail
    for j in range(r.shape[0] - 2, -1, -1):
        cj = min(ph(r[j]), ph(r[j + 1]))
        piece = quad(lambda x, cj=cj: a_density(x, cj), r[j], r[j + 1], s).value
        log_a[j] = np.logaddexp(log_a[j + 1], math.log(piece) - cj if piece > 0 else -math.inf)

    log_s = log_a / p + log_b * (p - 1.0) / p
    i = int(np.argmax(log_s))
    lr = np.log(r)
    decade = int(round((points - 1) / (math.log10(r_max) - math.log10(R_MIN))))
    span = min(2 * decade, points - 1)

    def slope_of(y, sl):
        if not np.all(np.isfinite(y[sl])):
            return math.nan
        return float(np.polyfit(lr[sl], y[sl], 1)[0])

    # growth across two decades: rising over the final decade and peaking at the end
    tail_slope = slope_of(log_s, slice(-decade - 1, None))
    head_slope = slope_of(log_s, slice(0, decade + 1))
    tail_peak = log_s[-1] >= np.max(log_s[-span - 1:])
    head_peak = log_s[0] >= np.max(log_s[:span + 1])
    a_exp = slope_of(log_a, slice(-decade - 1, None))
    b_exp = slope_of(log_b, slice(-decade - 1, None))
    finite, reason = True, ""
    if tail_slope > SLOPE_TOL and tail_peak:
        finite, reason = False, "product grows toward infinity"
    elif head_slope < -SLOPE_TOL and head_peak:
        finite, reason = False, "product grows toward zero"
    sup = float(np.exp(log_s[i])) if finite else math.inf
    return MuckenhouptReport(sup, float(r[i]), finite, a_exp, b_exp, reason, _grid_limited(mu),
                             tuple(r.tolist()), tuple(np.exp(log_s).tolist()))


def _grid_limited(mu):
    return mu.family not in ("power", "power_exponential", "lebesgue")


def muckenhoupt_rule(alpha, p):
    """Analytic verdict for power-exponential weights: finite iff ``0 <= alpha < p - 1``."""
    return 0.0 <= alpha < p - 1.0


# ---------------------------------------------------------------------------
# Power-exponential asymptotics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticRatios:
    a_ratio: float
    b_ratio: float
    a_limit: float
    b_limit: float
    underflow: bool


def powerexp_asymptotics(alpha, beta, p, r, settings=None):
    """Ratios of ``A(r)``, ``B(r)`` to their leading asymptotic forms.

    ``A(r) = int_r^inf x^{(beta-1)p+alpha} e^{-x^beta} dx`` over
    ``r^{(beta-1)(p-1)+alpha} e^{-r^beta}`` tends to ``1/beta``;
    ``B(r) = int_0^r x^{-alpha/(p-1)} e^{x^beta/(p-1)} dx`` over
    ``r^{-alpha/(p-1)-beta+1} e^{r^beta/(p-1)}`` tends to ``(p-1)/beta``.
    Both quotients are computed with the exponential factored out, so no
    overflow occurs; ``underflow`` reports that ``e^{-r^beta}`` itself would
    underflow in double precision.
    """
    s = settings or DEFAULT_SETTINGS
    alpha, beta, p, r = float(alpha), float(beta), float(p), float(r)
    k = 1.0 / (p - 1.0)
    a_exp = (beta - 1.0) * p + alpha
    rb = r ** beta

    def a_int(t):
        # x = r e^t, integrand divided by r^{a_exp+1} e^{-r^beta}
        with np.errstate(under="ignore", over="ignore"):
            return np.exp((a_exp + 1.0) * t - rb * np.expm1(beta * t))
    # both integrands peak at t = 0 with width about 1/(beta r^beta); rescale t to that width
    wa = 1.0 / (1.0 + beta * rb)
    a_val = wa * quad(lambda u: a_int(wa * u), 0.0, math.inf, s).value
    a_ratio = a_val * r ** (a_exp + 1.0) / r ** ((beta - 1.0) * (p - 1.0) + alpha)

    kappa = alpha * k

    def b_int(t):
        # x = r e^{-t}
        with np.errstate(under="ignore"):
            return np.exp((1.0 - kappa) * (-t) + rb * np.expm1(-beta * t) * k)
    if kappa >= 1.0:
        # x^{-kappa} is not integrable at 0: B(r) is infinite
        return AsymptoticRatios(a_ratio, math.inf, 1.0 / beta, (p - 1.0) / beta, rb > 745.0)
    wb = 1.0 / (1.0 + beta * k * rb)
    b_val = wb * quad(lambda u: b_int(wb * u), 0.0, math.inf, s).value
    b_ratio = b_val * r ** (1.0 - kappa) / r ** (-kappa - beta + 1.0)
    return AsymptoticRatios(a_ratio, b_ratio, 1.0 / beta, (p - 1.0) / beta, rb > 745.0)


def log_safe_radius(beta, budget=700.0):
    """Largest ``r`` with ``r**beta <= budget`` so that ``e^{-r^beta}`` stays representable."""
    return budget ** (1.0 / beta)


# ---------------------------------------------------------------------------
# Classical Hardy inequality on power weights
# ---------------------------------------------------------------------------

def classical_bound(p, alpha):
    """``(p / |alpha - p + 1|)**p``; infinite at the critical ``alpha = p - 1``."""
    gap = abs(alpha - p + 1.0)
    return math.inf if gap == 0.0 else (p / gap) ** p


def near_extremal(p, alpha, eps=0.05, plateau=100.0, cut=20.0):
    """Profile ``t**((p-1-alpha)/p +- eps)`` with a long exact-exponent plateau.

    On the plateau both Hardy integrands are constant in ``log t`` with ratio
    equal to the sharp constant, so the ratio approaches the bound as the
    plateau grows and ``eps`` shrinks.  Left-supported for ``alpha < p - 1``,
    right-supported otherwise.
    """
    if alpha == p - 1.0:
        raise ValueError("no extremal profile at the critical exponent")
    sigma = (p - 1.0 - alpha) / p
    side = "left" if alpha < p - 1.0 else "right"
    return corpus.power_cutoff(sigma, eps, plateau=plateau, cut=cut, side=side)


def _log_variable_integral(f, lo, hi, settings, knots=()):
    """``int_lo^hi f(t) dt`` evaluated in ``s = log t``."""
    a = math.log(lo) if lo > 0 else -math.inf
    b = math.log(hi) if math.isfinite(hi) else math.inf

    def g(s):
        with np.errstate(over="ignore", invalid="ignore"):
            t = np.exp(s)
            ok = (t > 0) & np.isfinite(t)
            tt = np.where(ok, t, 1.0)
            v = f(tt) * tt
        return np.where(ok, v, 0.0)
    pts = [math.log(k) for k in knots if lo < k < hi]
    return quad(g, a, b, settings, pts).value


def classical_hardy_ratio(u, p, alpha, settings=None):
    """``int |u|^p t^{alpha-p} dt / int |u'|^p t^alpha dt`` over ``u``'s support."""
    s = settings or QuadratureSettings(rel_tol=1e-10, abs_tol=1e-300, max_subdivisions=4000)
    p, alpha = float(p), float(alpha)
    lo, hi = max(u.support[0], 0.0), u.support[1]

    def weighted(fn, power):
        def h(t):
            v = np.abs(fn(t))
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                lv = p * np.log(np.where(v > 0, v, 1.0)) + power * np.log(t)
                return np.where(v > 0, np.exp(lv), 0.0)
        return h

    num = weighted(u.u, alpha - p)
    den = weighted(u.u1, alpha)

    n = _log_variable_integral(num, lo, hi, s, u.knots)
    d = _log_variable_integral(den, lo, hi, s, u.knots)
    if d == 0.0:
        if n == 0.0:
            return 0.0
        raise DivisionByZero(f"{u.id}: derivative integral vanishes")
    return n / d


# ---------------------------------------------------------------------------
# Fitted constants for the Hardy conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HardyRow:
    member: str
    theta: Optional[float]
    lhs: float
    rhs1: float
    rhs2: float


@dataclass(frozen=True)
class HardyFit:
    k: float
    k1: float
    k2: float
    a_dilation: float
    worst_function: str
    with_remainder: bool = False
    rows: tuple = field(default=(), repr=False)
    skipped: tuple = ()


def hardy_members(tf, a_dilation, thetas=None):
    """Channel triples ``(lhs, rhs1, rhs2)`` for the modular Hardy inequality.

    Without ``thetas`` the member is ``u`` itself.  With ``thetas`` it is
    ``f = (theta/A)|u'|`` for each ``theta``, whose derivative is bounded by
    ``(theta/A)|u''|``: the function the Hardy inequality is applied to
    when deriving the interpolation inequality.
    """
    if thetas is None:
        return [(None, Channel(tf, 0, 1.0, True), Channel(tf, 1, a_dilation), Channel(tf, 0))]
    out = []
    for th in thetas:
        c = th / a_dilation
        out.append((th, Channel(tf, 1, c, True), Channel(tf, 2, c * a_dilation), Channel(tf, 1, c)))
    return out


def _evaluate(args):
    th, lhs, r1, r2, p_fn, m_fn, mu, s, with_remainder = args
    lv = modular(lhs, p_fn, mu, s).value
    v1 = modular(r1, p_fn, mu, s).value
    v2 = modular(r2, m_fn, mu, s).value if with_remainder else 0.0
    return HardyRow(lhs.source.id, th, lv, v1, v2)


def fit_hardy_constants(p_fn, mu, corpus, a_dilation=1.0, with_remainder=False, m=None,
                        thetas=None, settings=None, jobs=1):
    """Smallest constants consistent with every corpus member.

    Without remainder, ``K = max LHS/RHS``.  With remainder, ``(K1, K2)``
    minimizes ``K1 + K2`` subject to ``LHS <= K1 RHS1 + K2 RHS2`` for every
    member; the objective is piecewise linear in ``K1`` so the minimum sits
    at a breakpoint and is found exactly.
    """
    a_dilation = float(a_dilation)
    if with_remainder and m is None:
        raise ValueError("the remainder form needs the N-function M")
    tasks = []
    for tf in corpus:
        for th, lhs, r1, r2 in hardy_members(tf, a_dilation, thetas):
            tasks.append((th, lhs, r1, r2, p_fn, m, mu, settings, with_remainder))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_evaluate, tasks))
    else:
        rows = [_evaluate(t) for t in tasks]

    kept, skipped = [], []
    for row in rows:
        if row.lhs == 0.0:
            skipped.append(row.member)
            continue
        if row.rhs1 == 0.0 and (not with_remainder or row.rhs2 == 0.0):
            raise DivisionByZero(f"{row.member}: right-hand side vanishes but left does not")
        kept.append(row)
    if not kept:
        return HardyFit(0.0, 0.0, 0.0, a_dilation, "", with_remainder, tuple(rows), tuple(skipped))

    lhs = np.array([r.lhs for r in kept])
    r1 = np.array([r.rhs1 for r in kept])
    if not with_remainder:
        with np.errstate(divide="ignore"):
            ratio = lhs / r1
        i = int(np.argmax(ratio))
        k = float(ratio[i])
        return HardyFit(k, k, 0.0, a_dilation, kept[i].member, False, tuple(rows), tuple(skipped))

    r2 = np.array([r.rhs2 for r in kept])
    tiny = 1e-300
    k1, k2 = _kernels.k1k2_minimize(lhs, np.maximum(r1, tiny), np.maximum(r2, tiny))
    slack = lhs - k1 * r1 - k2 * r2
    i = int(np.argmax(slack / lhs))
    with np.errstate(divide="ignore"):
        k_plain = float(np.max(lhs / r1))
    return HardyFit(k_plain, k1, k2, a_dilation, kept[i].member, True, tuple(rows), tuple(skipped))
