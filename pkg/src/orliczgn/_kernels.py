"""Array kernels with a numba path and a pure-numpy fallback.

The numba versions are used when numba imports cleanly and the environment
variable ``ORLICZGN_PURE_NUMPY`` is unset (or ``0``).  Both paths are always
importable as ``*_numpy`` / ``*_numba`` so tests and the benchmark can compare
them directly.
"""

import os

import numpy as np

_FLAG = os.environ.get("ORLICZGN_PURE_NUMPY", "").strip().lower()
PURE_NUMPY = _FLAG not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not PURE_NUMPY

# 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15), nodes in ascending order.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG7 = np.array([
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
GK_WEIGHTS_K = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
GK_WEIGHTS_G = np.concatenate([_WG7[:-1], [_WG7[-1]], _WG7[-2::-1]])

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


# ---------------------------------------------------------------------------
# Gauss-Kronrod panel reduction
# ---------------------------------------------------------------------------

def gk_reduce_numpy(fvals, half):
    """Return (kronrod, error) per panel for ``fvals`` of shape (n, 15)."""
    res_k = fvals @ GK_WEIGHTS_K
    res_g = fvals @ GK_WEIGHTS_G
    mean = 0.5 * res_k
    resasc = np.abs(fvals - mean[:, None]) @ GK_WEIGHTS_K
    resabs = np.abs(fvals) @ GK_WEIGHTS_K
    err = np.abs(res_k - res_g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0.0) & (err != 0.0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, err), err)
    return res_k * np.abs(half), err * np.abs(half)


def _gk_reduce_loop(fvals, half, wk, wg):
    n = fvals.shape[0]
    out_k = np.empty(n)
    out_e = np.empty(n)
    for i in range(n):
        rk = 0.0
        rg = 0.0
        rabs = 0.0
        for j in range(15):
            f = fvals[i, j]
            rk += wk[j] * f
            rg += wg[j] * f
            rabs += wk[j] * abs(f)
        mean = 0.5 * rk
        rasc = 0.0
        for j in range(15):
            rasc += wk[j] * abs(fvals[i, j] - mean)
        err = abs(rk - rg)
        if rasc != 0.0 and err != 0.0:
            ratio = (200.0 * err / rasc) ** 1.5
            err = rasc * min(1.0, ratio)
        if rabs > 2.2250738585072014e-308 / (50.0 * 2.220446049250313e-16):
            err = max(50.0 * 2.220446049250313e-16 * rabs, err)
        h = abs(half[i])
        out_k[i] = rk * h
        out_e[i] = err * h
    return out_k, out_e


# ---------------------------------------------------------------------------
# Discrete Legendre transform: argmax_i (x_i * y_j - m_i) for sorted y
# ---------------------------------------------------------------------------

def legendre_argmax_numpy(x, mx, y, chunk=256):
    """Brute force argmax over the tabulated points, chunked over ``y``."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape[0], dtype=np.int64)
    for start in range(0, y.shape[0], chunk):
        yy = y[start:start + chunk]
        obj = yy[:, None] * x[None, :] - mx[None, :]
        out[start:start + chunk] = np.argmax(obj, axis=1)
    return out


def _legendre_argmax_loop(x, mx, y):
    # Lower convex hull of (x_i, m_i); a linear functional attains its max
    # over the points at a hull vertex, and the maximizing vertex moves
    # monotonically with the slope y.
    n = x.shape[0]
    hull = np.empty(n, dtype=np.int64)
    h = 0
    for i in range(n):
        while h >= 2:
            i0 = hull[h - 2]
            i1 = hull[h - 1]
            cross = (x[i1] - x[i0]) * (mx[i] - mx[i0]) - (mx[i1] - mx[i0]) * (x[i] - x[i0])
            if cross <= 0.0:
                h -= 1
            else:
                break
        hull[h] = i
        h += 1
    out = np.empty(y.shape[0], dtype=np.int64)
    k = 0
    for j in range(y.shape[0]):
        yj = y[j]
        while k + 1 < h:
            a = hull[k]
            b = hull[k + 1]
            if x[b] * yj - mx[b] >= x[a] * yj - mx[a]:
                k += 1
            else:
                break
        out[j] = hull[k]
    return out


# ---------------------------------------------------------------------------
# Cubic Hermite evaluation clamped to the convex envelope
# ---------------------------------------------------------------------------

def hermite_convex_numpy(yk, vk, sk, yq):
    """Interpolate a convex function from values ``vk`` and slopes ``sk``.

    ``yq`` must lie inside ``[yk[0], yk[-1]]``.  The cubic Hermite value is
    clamped between the supporting tangent lines and the chord.
    """
    i = np.clip(np.searchsorted(yk, yq, side="right") - 1, 0, yk.shape[0] - 2)
    y0 = yk[i]
    y1 = yk[i + 1]
    h = y1 - y0
    t = (yq - y0) / h
    v0, v1, s0, s1 = vk[i], vk[i + 1], sk[i], sk[i + 1]
    t2 = t * t
    t3 = t2 * t
    val = ((2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * s0
           + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * s1)
    lower = np.maximum(v0 + s0 * (yq - y0), v1 + s1 * (yq - y1))
    upper = v0 + (v1 - v0) * t
    return np.minimum(np.maximum(val, lower), upper)


def _hermite_convex_loop(yk, vk, sk, yq):
    n = yk.shape[0]
    out = np.empty(yq.shape[0])
    for j in range(yq.shape[0]):
        q = yq[j]
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if yk[mid] <= q:
                lo = mid
            else:
                hi = mid
        i = lo
        y0 = yk[i]
        y1 = yk[i + 1]
        h = y1 - y0
        t = (q - y0) / h
        v0 = vk[i]
        v1 = vk[i + 1]
        s0 = sk[i]
        s1 = sk[i + 1]
        t2 = t * t
        t3 = t2 * t
        val = ((2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * s0
               + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * s1)
        lower = max(v0 + s0 * (q - y0), v1 + s1 * (q - y1))
        upper = v0 + (v1 - v0) * t
        out[j] = min(max(val, lower), upper)
    return out


# ---------------------------------------------------------------------------
# Deterministic pairwise (tree) summation
# ---------------------------------------------------------------------------

def pairwise_sum_numpy(a):
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return 0.0
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, [0.0]])
        a = a[0::2] + a[1::2]
    return float(a[0])


def _pairwise_sum_loop(a):
    n = a.shape[0]
    if n == 0:
        return 0.0
    buf = a.copy()
    while n > 1:
        m = (n + 1) // 2
        for i in range(m):
            j = 2 * i + 1
            if j < n:
                buf[i] = buf[2 * i] + buf[j]
            else:
                buf[i] = buf[2 * i]
        n = m
    return buf[0]


# ---------------------------------------------------------------------------
# Remainder-form Hardy fit: minimize k1 + k2 s.t. lhs <= k1 r1 + k2 r2
# ---------------------------------------------------------------------------

def _k2_for(k1, lhs, r1, r2):
    need = np.maximum(lhs - k1 * r1, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(need > 0.0, need / r2, 0.0)
    return float(q.max()) if q.size else 0.0


def k1k2_minimize_numpy(lhs, r1, r2):
    """Exact minimizer of k1 + k2 over the piecewise-linear breakpoints.

    Requires r1 > 0 and r2 > 0 for every member.  Returns (k1, k2).
    """
    cands = [0.0]
    cands.extend((lhs / r1).tolist())
    n = lhs.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            # intersection of the two constraint lines (lhs - k1 r1)/r2
            den = r1[i] / r2[i] - r1[j] / r2[j]
            if den != 0.0:
                k1 = (lhs[i] / r2[i] - lhs[j] / r2[j]) / den
                if k1 > 0.0:
                    cands.append(k1)
    best = (np.inf, 0.0, 0.0)
    for k1 in sorted(set(cands)):
        k2 = _k2_for(k1, lhs, r1, r2)
        tot = k1 + k2
        if tot < best[0]:
            best = (tot, k1, k2)
    return best[1], best[2]


def _k1k2_loop(lhs, r1, r2):
    n = lhs.shape[0]
    ncand = 1 + n + n * (n - 1) // 2
    cands = np.zeros(ncand)
    c = 1
    for i in range(n):
        cands[c] = lhs[i] / r1[i]
        c += 1
    for i in range(n):
        for j in range(i + 1, n):
            den = r1[i] / r2[i] - r1[j] / r2[j]
            if den != 0.0:
                k1 = (lhs[i] / r2[i] - lhs[j] / r2[j]) / den
                if k1 > 0.0:
                    cands[c] = k1
                    c += 1
    cands = np.sort(cands[:c])
    best_tot = np.inf
    best_k1 = 0.0
    best_k2 = 0.0
    for m in range(c):
        k1 = cands[m]
        k2 = 0.0
        for i in range(n):
            need = lhs[i] - k1 * r1[i]
            if need > 0.0:
                q = need / r2[i]
                if q > k2:
                    k2 = q
        if k1 + k2 < best_tot:
            best_tot = k1 + k2
            best_k1 = k1
            best_k2 = k2
    return best_k1, best_k2


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _njit = numba.njit(cache=True, nogil=True)
    _gk_reduce_nb = _njit(_gk_reduce_loop)
    legendre_argmax_numba = _njit(_legendre_argmax_loop)
    hermite_convex_numba = _njit(_hermite_convex_loop)
    pairwise_sum_numba = _njit(_pairwise_sum_loop)
    _k1k2_nb = _njit(_k1k2_loop)

    def gk_reduce_numba(fvals, half):
        return _gk_reduce_nb(np.ascontiguousarray(fvals, dtype=np.float64),
                             np.ascontiguousarray(half, dtype=np.float64),
                             GK_WEIGHTS_K, GK_WEIGHTS_G)

    def k1k2_minimize_numba(lhs, r1, r2):
        k1, k2 = _k1k2_nb(np.asarray(lhs, float), np.asarray(r1, float), np.asarray(r2, float))
        return float(k1), float(k2)
else:  # pragma: no cover
    gk_reduce_numba = gk_reduce_numpy
    legendre_argmax_numba = legendre_argmax_numpy
    hermite_convex_numba = hermite_convex_numpy
    pairwise_sum_numba = pairwise_sum_numpy
    k1k2_minimize_numba = k1k2_minimize_numpy


if USE_NUMBA:
    gk_reduce = gk_reduce_numba

    def legendre_argmax(x, mx, y):
        return legendre_argmax_numba(np.asarray(x, float), np.asarray(mx, float),
                                     np.ascontiguousarray(y, dtype=float))

    def hermite_convex(yk, vk, sk, yq):
        return hermite_convex_numba(yk, vk, sk, np.ascontiguousarray(yq, dtype=float))

    def pairwise_sum(a):
        return float(pairwise_sum_numba(np.ascontiguousarray(a, dtype=float)))

    k1k2_minimize = k1k2_minimize_numba
else:
    gk_reduce = gk_reduce_numpy
    legendre_argmax = legendre_argmax_numpy
    hermite_convex = hermite_convex_numpy
    pairwise_sum = pairwise_sum_numpy
    k1k2_minimize = k1k2_minimize_numpy
