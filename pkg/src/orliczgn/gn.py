"""Gagliardo-Nirenberg inequalities in modular and Luxemburg-norm form.

The pipeline follows the derivation of the interpolation inequality from a
Hardy inequality: fit the Hardy constants on the corpus, calibrate the
one-dimensional integration-by-parts constant, assemble the constant ledger,
then check the modular and norm inequalities member by member.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import Degenerate, MissingFit, NotNFunctions
from .hardy import HardyFit, fit_hardy_constants
from .measure import DEFAULT_SETTINGS, integrate, quad
from .nfunc import scale_bound, simonenko_indices
from .norms import Channel, luxemburg_norm, modular
from .triple import pq_are_nfunctions

REL_SLACK = 1e-9
THETA_GRID = tuple(round(0.05 * k, 10) for k in range(1, 21))
THETA_EXTRA_H = (1.25, 1.5, 2.0, 3.0, 4.0)


def theta_grid(mode):
    """``{0.05 k : k = 1..20}``; mode H also samples ``theta > 1`` up to 4."""
    return THETA_GRID + (THETA_EXTRA_H if mode == "H" else ())


# ---------------------------------------------------------------------------
# Constant ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantLedger:
    alpha_n: float
    a_dilation: float
    k: float
    k1: float
    k2: float
    l: float
    b: float
    l_tilde: float
    l1: float
    l2: float
    mode: str
    c_bar: float = 1.0

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def ledger_constants(mode, alpha_n, a_dilation, k=0.0, k1=0.0, k2=0.0, c_bar=1.0):
    """``(L, B, L~, L1, L2)`` from the Hardy constants."""
    if mode == "H":
        l = k + 1.0
        b = 2.0 * (alpha_n + a_dilation)
    elif mode == "H1":
        l = k1 + 1.0
        b = 2.0 * (alpha_n + a_dilation + a_dilation * c_bar * k2)
    else:
        raise ValueError(f"unknown ledger mode {mode!r}")
    l_tilde = 2.0 * (l + 2.0) * math.sqrt(b)
    l1 = 2.0 * (l + 2.0) * math.sqrt(b)
    l2 = 2.0 * (l + 2.0) * b
    return l, b, l_tilde, l1, l2


def build_ledger(fit, alpha_n, idx, mode=None):
    """Derived constants for mode ``H`` (no remainder) or ``H1`` (remainder)."""
    if fit is None:
        raise MissingFit("no Hardy fit supplied")
    mode = mode or ("H1" if fit.with_remainder else "H")
    if mode == "H1" and not fit.with_remainder:
        raise MissingFit("mode H1 needs a fit with the remainder term")
    a = float(fit.a_dilation)
    c_bar = scale_bound(idx, 1.0 / a) if idx is not None else 1.0
    l, b, lt, l1, l2 = ledger_constants(mode, float(alpha_n), a, fit.k, fit.k1, fit.k2, c_bar)
    return ConstantLedger(float(alpha_n), a, fit.k, fit.k1, fit.k2, l, b, lt, l1, l2, mode, c_bar)


def corrupt_ledger(ledger, factor=0.01):
    """The same ledger with ``B`` multiplied by ``factor`` (sensitivity check)."""
    return replace(ledger, b=ledger.b * factor)


# ---------------------------------------------------------------------------
# theta minimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaMin:
    theta_star: float
    value: float
    bound_ok: bool


def theta_minimize(b_term, c_term, restricted=False):
    """Minimize ``theta b + c/theta`` over ``theta > 0`` or ``theta in (0, 1]``.

    Unrestricted the minimum is ``2 sqrt(bc)`` at ``sqrt(c/b)``.  Restricted,
    ``theta* = min(1, sqrt(c/b))`` and the value is ``b + c`` once the free
    minimizer leaves (0, 1); in every case the value obeys
    ``value <= 2 (sqrt(bc) + c)``.
    """
    b, c = float(b_term), float(c_term)
    if b < 0 or c < 0:
        raise ValueError("theta_minimize needs nonnegative terms")
    root = math.sqrt(b * c)
    if b == 0.0:
        # theta b + c/theta decreases without bound in theta
        theta, value = (math.inf, 0.0) if not restricted else (1.0, c)
    elif c == 0.0:
        theta, value = 0.0, 0.0
    else:
        free = math.sqrt(c / b)
        if restricted and free >= 1.0:
            theta, value = 1.0, b + c
        else:
            theta, value = free, 2.0 * root
    return ThetaMin(theta, value, value <= 2.0 * (root + c))


# ---------------------------------------------------------------------------
# Calibration of the integration-by-parts constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaRow:
    member: str
    i: float
    i1: float
    i2: float
    alpha: float


@dataclass(frozen=True)
class AlphaCalibration:
    alpha: float
    worst_function: str
    rows: tuple = ()


SCAN_POINTS = 4001


def _scan_grid(lo, hi, n=SCAN_POINTS):
    t = np.linspace(0.0, 1.0, n)[1:-1]
    if math.isinf(lo) and math.isinf(hi):
        return np.tan(math.pi * (t - 0.5))
    if math.isinf(hi):
        return lo + t / (1.0 - t)
    if math.isinf(lo):
        return hi - (1.0 - t) / t
    return lo + (hi - lo) * t


def _critical_points(f1, lo, hi):
    """Sign changes of ``u'`` on ``(lo, hi)``, refined by Brent's method."""
    x = _scan_grid(lo, hi)
    v = np.asarray(f1(x), dtype=float)
    live = np.nonzero(v != 0.0)[0]
    out = []
    for i, j in zip(live[:-1], live[1:]):
        if np.sign(v[i]) != np.sign(v[j]):
            if j == i + 1:
                out.append(brentq(lambda z: float(f1(np.array([z]))[0]), x[i], x[j], xtol=1e-15))
            else:
                out.append(0.5 * (x[i + 1] + x[j - 1]))   # flat stretch: any point inside
    return out


EXCISE = 1e-7      # half-width of the model window around a critical point, relative to the support


def _local_i1(m, u0, u2, w0, delta, s):
    """One-sided ``int_0^delta`` of the ``I1`` integrand with ``u'`` replaced by ``u''(c) r``.

    Substituting ``s = |u''(c)| r`` gives ``|u(c)| w(c) int_0^{|u''(c)| delta} M(s)/s^2 ds``,
    which has no cancellation near ``s = 0``.
    """
    top = abs(u2) * delta

    def h(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = np.where(x > 0, x, 1.0)
            return np.where(x > 0, np.asarray(m.value(x), dtype=float) / xs / xs, 0.0)
    return abs(u0) * w0 * quad(h, 0.0, top, s, left_power=4).value


def _gradient_integrals(tf, m, mu, settings):
    """``(I, I1, I2)`` over ``{u' != 0}``.

    Near a zero ``c`` of ``u'`` the ``I1`` integrand ``M(|u'|)/|u'|^2 |u''||u|``
    may blow up like ``|x - c|^(d-2)`` (``d`` the lower index of ``M``), and
    ``u'`` itself is only known to rounding accuracy in ``x``.  A window of
    half-width ``EXCISE * |support|`` around every such ``c`` is therefore
    replaced by the first-order model ``u' = u''(c)(x - c)``, integrated in
    closed form.  Only a relative tolerance is used, since ``alpha`` is a ratio
    of possibly tiny integrals.
    """
    s = replace(settings or DEFAULT_SETTINGS, abs_tol=1e-300)

    def lead(x):
        g = np.abs(tf.u1(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            return g, np.asarray(m.value(g), dtype=float)

    def f_i(x):
        return lead(x)[1]

    def f_i1(x):
        g, mg = lead(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            gs = np.where(g > 0, g, 1.0)
            return np.where(g > 0, mg / gs / gs, 0.0) * np.abs(tf.u2(x)) * np.abs(tf.u(x))

    def f_i2(x):
        g, mg = lead(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(g > 0, mg / np.where(g > 0, g, 1.0), 0.0) * mu.grad_phi_abs(x) * np.abs(tf.u(x))

    lo, hi = max(mu.a, tf.support[0]), min(mu.b, tf.support[1])
    if not lo < hi:
        return 0.0, 0.0, 0.0
    crit = _critical_points(tf.u1, lo, hi)
    knots = [p for p in tuple(tf.knots) + tuple(mu.breakpoints) if lo < p < hi]
    pts = sorted(set(crit) | set(knots))
    i = integrate(f_i, mu, s, support=(lo, hi), points=pts).value
    i2 = integrate(f_i2, mu, s, support=(lo, hi), points=pts).value

    width = (hi - lo) if math.isfinite(hi - lo) else 1.0
    delta = EXCISE * width
    edges, local = [lo], 0.0
    for c in crit:
        at = np.array([c])
        u0, u2 = float(tf.u(at)[0]), float(tf.u2(at)[0])
        if u2 == 0.0 or not (lo + delta < c < hi - delta):
            continue   # degenerate zero: kept as a breakpoint only
        local += 2.0 * _local_i1(m, u0, u2, float(mu.density(at)[0]), delta, s)
        edges += [c - delta, c + delta]
    edges.append(hi)
    i1 = local
    for a, b in zip(edges[0::2], edges[1::2]):
        if a < b:
            i1 += integrate(f_i1, mu, s, support=(a, b), points=[p for p in pts if a < p < b]).value
    return i, i1, i2


def calibrate_alpha_n(corpus, m, mu, settings=None):
    """Smallest ``alpha >= 0`` with ``I <= alpha I1 + I2`` on every member.

    ``I = int M(|u'|)``, ``I1 = int M(|u'|)/|u'|^2 |u''||u|`` and
    ``I2 = int M(|u'|)/|u'| |phi'||u|``, integrated over ``{u' != 0}``.
    Members whose gradient vanishes identically are skipped.
    """
    rows, best, worst = [], 0.0, ""
    for tf in corpus:
        i, i1, i2 = _gradient_integrals(tf, m, mu, settings)
        if i == 0.0:
            continue
        if i1 == 0.0:
            if i > i2:
                raise Degenerate(f"{tf.id}: I1 = 0 while I > I2")
            a = 0.0
        else:
            a = (i - i2) / i1
        rows.append(AlphaRow(tf.id, i, i1, i2, a))
        if a > best:
            best, worst = a, tf.id
    return AlphaCalibration(max(best, 0.0), worst, tuple(rows))


# ---------------------------------------------------------------------------
# Modular inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GNRow:
    member: str
    theta: float
    lhs_modular: float
    rhs_p_term: float
    rhs_q_term: float
    satisfied: bool
    ratio: float
    analytic: bool = False


@dataclass(frozen=True)
class GNReport:
    rows: tuple
    worst_ratio: float
    worst_member: str
    empirical_l: float
    satisfied: bool

    @staticmethod
    def from_rows(rows):
        rows = tuple(rows)
        if not rows:
            return GNReport(rows, 0.0, "", 0.0, True)
        i = max(range(len(rows)), key=lambda j: rows[j].ratio)
        emp = 0.0
        for r in rows:
            if r.rhs_p_term > 0:
                emp = max(emp, (r.lhs_modular - r.rhs_q_term) / r.rhs_p_term)
        return GNReport(rows, rows[i].ratio, rows[i].member, emp, all(r.satisfied for r in rows))


def _row(member, theta, lhs, r1, r2, ledger, analytic=False):
    rhs = ledger.l * r1 + r2
    ok = lhs <= rhs * (1.0 + REL_SLACK)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return GNRow(member, float(theta), lhs, r1, r2, bool(ok), ratio, analytic)


def _envelope_theta(r1a, r1b, r2a, r2b, l, ta, tb):
    """Minimizer of ``L c1 theta^a + c2 theta^-b`` fitted through two thetas."""
    if min(r1a, r1b, r2a, r2b) <= 0:
        return None
    lg = math.log(tb / ta)
    a = math.log(r1b / r1a) / lg
    b = math.log(r2a / r2b) / lg
    if a <= 0 or b <= 0:
        return None
    c1 = r1b / tb ** a
    c2 = r2b * tb ** b
    return (b * c2 / (a * l * c1)) ** (1.0 / (a + b))


def gn_modular_check(u, triple, mu, ledger, thetas=None, settings=None, analytic=True):
    """Rows ``(theta, LHS, RHS_P, RHS_Q)`` of the modular inequality for one member.

    ``LHS = int M(|u'|)``, ``RHS_P = int P(theta |u''|)``,
    ``RHS_Q = int Q((B/theta)|u|)``; a row holds when
    ``LHS <= L RHS_P + RHS_Q``.  Besides the grid, the analytic minimizer of
    the fitted power envelope of the right-hand side is evaluated (clamped to
    ``(0, 1]`` in mode H1).
    """
    thetas = tuple(thetas) if thetas is not None else theta_grid(ledger.mode)
    if ledger.mode == "H1":
        thetas = tuple(t for t in thetas if 0 < t <= 1.0)
    lhs = modular(Channel(u, 1), triple.m, mu, settings).value
    rows = []
    cache = {}

    def terms(th):
        if th not in cache:
            r1 = modular(Channel(u, 2, th), triple.p, mu, settings).value
            r2 = modular(Channel(u, 0, ledger.b / th), triple.q, mu, settings).value
            cache[th] = (r1, r2)
        return cache[th]

    for th in thetas:
        r1, r2 = terms(th)
        rows.append(_row(u.id, th, lhs, r1, r2, ledger))
    if analytic and len(thetas) >= 2:
        ta, tb = min(thetas), max(thetas)
        (r1a, r2a), (r1b, r2b) = terms(ta), terms(tb)
        star = _envelope_theta(r1a, r1b, r2a, r2b, ledger.l, ta, tb)
        if star is not None and math.isfinite(star):
            hi = 1.0 if ledger.mode == "H1" else max(thetas)
            star = min(max(star, ta), hi)
            r1, r2 = terms(star)
            rows.append(_row(u.id, star, lhs, r1, r2, ledger, analytic=True))
    return rows


def gn_modular_campaign(corpus, triple, mu, ledger, thetas=None, settings=None, jobs=1):
    def one(tf):
        return gn_modular_check(tf, triple, mu, ledger, thetas, settings)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(one, corpus))
    else:
        parts = [one(tf) for tf in corpus]
    return GNReport.from_rows(r for part in parts for r in part)


# ---------------------------------------------------------------------------
# Norm inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormRow:
    member: str
    lhs_norm: float
    rhs_product_term: float
    rhs_linear_term: float
    satisfied: bool
    n2: float = 0.0
    n0: float = 0.0

    @property
    def ratio(self):
        rhs = self.rhs_product_term + self.rhs_linear_term
        return self.lhs_norm / rhs if rhs > 0 else (0.0 if self.lhs_norm == 0 else math.inf)


def gn_norm_check(u, triple, mu, ledger, settings=None, pq_nfunctions=None):
    """``||u'||_M <= L~ sqrt(||u''||_P ||u||_Q)`` (mode H), plus ``L2 ||u||_Q`` in mode H1."""
    flag = pq_are_nfunctions(triple) if pq_nfunctions is None else pq_nfunctions
    if not flag:
        raise NotNFunctions(f"{triple.label}: P or Q is not an N-function")
    n1 = luxemburg_norm(Channel(u, 1), triple.m, mu, settings)
    n2 = luxemburg_norm(Channel(u, 2), triple.p, mu, settings)
    n0 = luxemburg_norm(Channel(u, 0), triple.q, mu, settings)
    if ledger.mode == "H":
        prod, lin = ledger.l_tilde * math.sqrt(n2 * n0), 0.0
    else:
        prod, lin = ledger.l1 * math.sqrt(n2 * n0), ledger.l2 * n0
    ok = n1 <= (prod + lin) * (1.0 + REL_SLACK)
    return NormRow(u.id, n1, prod, lin, bool(ok), n2, n0)


def norm_ratio(u, triple, mu, settings=None):
    """``||u'||_M^2 / (||u''||_P ||u||_Q)``; dilation invariant for quadratic M=P=Q on the line."""
    n1 = luxemburg_norm(Channel(u, 1), triple.m, mu, settings)
    n2 = luxemburg_norm(Channel(u, 2), triple.p, mu, settings)
    n0 = luxemburg_norm(Channel(u, 0), triple.q, mu, settings)
    return n1 * n1 / (n2 * n0)


# ---------------------------------------------------------------------------
# The P = Q = M specialization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class B1Row:
    member: str
    theta: float
    q_term: float        # int M((B/theta)|u|)
    b1_term: float       # C2 int M(|u|/theta) with C2 = c_bar(B)
    c1: float
    c2: float


def statb1_compare(u, m, mu, ledger, idx=None, thetas=None, settings=None):
    """Compare ``int M((B/theta)|u|)`` with ``c_bar(B) int M(|u|/theta)`` term by term.

    With ``P = Q = M`` the remainder term of the modular inequality can be
    written as ``C2 int M(|u|/theta)`` using the dilation bound; this returns
    both forms so they can be compared (equal for pure powers).
    """
    idx = idx or simonenko_indices(m)
    c2 = scale_bound(idx, ledger.b)
    thetas = tuple(thetas) if thetas is not None else THETA_GRID
    out = []
    for th in thetas:
        direct = modular(Channel(u, 0, ledger.b / th), m, mu, settings).value
        scaled = modular(Channel(u, 0, 1.0 / th), m, mu, settings).value
        out.append(B1Row(u.id, th, direct, c2 * scaled, ledger.l, c2))
    return out


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

@dataclass
class GNCampaign:
    ledger: ConstantLedger
    fit: HardyFit
    alpha: AlphaCalibration
    modular: GNReport
    norms: list = field(default_factory=list)
    pq_nfunctions: bool = True
    corrupted: Optional[GNReport] = None

    @property
    def satisfied(self):
        return self.modular.satisfied and all(r.satisfied for r in self.norms)


def run_gn(triple, mu, corpus, mode="H", thetas=None, a_dilation=1.0, settings=None, jobs=1,
           with_norms=True, corrupt_factor=None):
    """Fit Hardy constants, calibrate ``alpha_n``, build the ledger and check every member.

    The Hardy constants are fitted over the functions ``(theta/A)|u'|`` for
    every ``theta`` in the grid, which is exactly where the derivation
    applies the Hardy inequality.
    """
    thetas = tuple(thetas) if thetas is not None else theta_grid(mode)
    if mode == "H1":
        thetas = tuple(t for t in thetas if t <= 1.0)
    fit = fit_hardy_constants(triple.p, mu, corpus, a_dilation, with_remainder=(mode == "H1"),
                              m=triple.m, thetas=thetas, settings=settings, jobs=jobs)
    alpha = calibrate_alpha_n(corpus, triple.m, mu, settings)
    idx = simonenko_indices(triple.m)
    ledger = build_ledger(fit, alpha.alpha, idx, mode)
    report = gn_modular_campaign(corpus, triple, mu, ledger, thetas, settings, jobs)
    flag = pq_are_nfunctions(triple)
    norms = []
    if with_norms and flag:
        def one(tf):
            return gn_norm_check(tf, triple, mu, ledger, settings, flag)
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                norms = list(ex.map(one, corpus))
        else:
            norms = [one(tf) for tf in corpus]
    corrupted = None
    if corrupt_factor is not None:
        corrupted = gn_modular_campaign(corpus, triple, mu, corrupt_ledger(ledger, corrupt_factor),
                                        thetas, settings, jobs)
    return GNCampaign(ledger, fit, alpha, report, norms, flag, corrupted)
