"""Time the numba kernels against their pure-numpy twins.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--scale S]

Each kernel runs once untimed (JIT warm-up), then the best of ``repeat``
timings is reported together with the max deviation between the two paths.
An end-to-end quadrature-heavy call is timed in a subprocess per path, since
the dispatch is fixed at import time by ORLICZGN_PURE_NUMPY.
"""

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from orliczgn import _kernels as K


def cases(scale, rng):
    n_panels = 2000 * scale
    fv = rng.standard_normal((n_panels, K.GK_NODES.shape[0]))
    half = rng.uniform(1e-3, 1.0, n_panels)

    x = np.logspace(-4, 4, 4000 * scale)
    mx = x ** 3 / 3
    y = np.logspace(-3, 3, 2000 * scale)

    yk = np.sort(rng.uniform(0, 10, 500 * scale))
    vk = yk ** 2
    sk = 2 * yk
    yq = rng.uniform(0, 10, 20000 * scale)

    a = rng.standard_normal(200_000 * scale)

    m = 60 * scale
    lhs, r1, r2 = rng.uniform(0.1, 2, m), rng.uniform(0.1, 2, m), rng.uniform(0.1, 2, m)
    return [
        ("gk_reduce", K.gk_reduce_numpy, K.gk_reduce_numba, (fv, half)),
        ("legendre_argmax", K.legendre_argmax_numpy, K.legendre_argmax_numba, (x, mx, y)),
        ("hermite_convex", K.hermite_convex_numpy, K.hermite_convex_numba, (yk, vk, sk, yq)),
        ("pairwise_sum", K.pairwise_sum_numpy, K.pairwise_sum_numba, (a,)),
        ("k1k2_minimize", K.k1k2_minimize_numpy, K.k1k2_minimize_numba, (lhs, r1, r2)),
    ]


def deviation(a, b):
    a = np.atleast_1d(np.asarray(a, dtype=float).ravel() if not isinstance(a, tuple) else np.array(a))
    b = np.atleast_1d(np.asarray(b, dtype=float).ravel() if not isinstance(b, tuple) else np.array(b))
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))


def best_of(fn, args, repeat):
    fn(*args)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


PIPELINE = """
import math, time
from orliczgn import corpus as C, measure as M, nfunc as N, hardy as H

def work():
    t0 = time.perf_counter()
    N.conjugate(N.powerlog(2, 1), use_analytic=False)
    H.fit_hardy_constants(N.power(2), M.gaussian(), C.default_corpus((0, math.inf)),
                          with_remainder=True, m=N.power(2))
    return time.perf_counter() - t0

cold = work()
warm = min(work() for _ in range(3))
print(cold, warm)
"""


def pipeline_time(pure):
    env = dict(os.environ, ORLICZGN_PURE_NUMPY="1" if pure else "0")
    # first run fills the numba cache; the second is timed
    subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True, check=True)
    out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True,
                         text=True, check=True)
    cold, warm = out.stdout.strip().splitlines()[-1].split()
    return float(cold), float(warm)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=int, default=1, help="problem size multiplier")
    ap.add_argument("--no-pipeline", action="store_true", help="skip the end-to-end timing")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"numba available: {K.HAVE_NUMBA}; default path: {'numba' if K.USE_NUMBA else 'numpy'}")
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}{'max rel dev':>14}")
    for name, f_np, f_nb, fargs in cases(args.scale, rng):
        t_np = best_of(f_np, fargs, args.repeat)
        t_nb = best_of(f_nb, fargs, args.repeat)
        dev = deviation(f_np(*fargs), f_nb(*fargs))
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}{dev:>14.1e}")
    if not args.no_pipeline:
        # cold includes loading the cached machine code on first call
        (c_np, w_np), (c_nb, w_nb) = pipeline_time(True), pipeline_time(False)
        for label, a, b in (("pipeline cold", c_np, c_nb), ("pipeline warm", w_np, w_nb)):
            ratio = a / b if b > 0 else math.inf
            print(f"{label:<18}{1e3 * a:>12.1f}{1e3 * b:>12.1f}{ratio:>10.1f}{'':>14}")


if __name__ == "__main__":
    main()
