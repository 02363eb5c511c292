"""Time the compiled kernels against the numpy fallback on identical inputs.

    python benchmarks/bench_kernels.py [--size 1024] [--repeat 5]

Each row reports best-of-N wall time per backend, the speed-up and the
largest relative difference between the two results.
"""

import argparse
import time

import numpy as np

from stablefield import FilterSpec, rho
from stablefield._accel import HAS_NUMBA
from stablefield.kernels import cf_rows, cms, mass_rows, v_rows


def best_of(fn, repeat):
    fn()  # warm-up (jit compile on first call)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def rel_diff(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / scale)


def cases(size, alpha):
    rng = np.random.default_rng(0)
    i = np.arange(size, dtype=float)
    X = np.outer((1 + i) ** -2.0, (1 + i) ** -1.5)
    Y = np.outer((4 + i) ** -2.0, (1 + i) ** -1.5)
    theta = rng.normal(size=(16, 2))
    V = rng.uniform(-np.pi / 2, np.pi / 2, size * size)
    W = rng.exponential(size=size * size)
    spec = FilterSpec.parametric(alpha, 2.0, 2.0)
    return [
        ("v_rows", lambda nb: v_rows(X, Y, alpha, nb)[0]),
        ("mass_rows", lambda nb: mass_rows(X, Y, alpha, nb)),
        ("cf_rows", lambda nb: cf_rows(X, Y, theta, alpha, nb)),
        ("cms", lambda nb: cms(V, W, alpha, nb)),
        ("rho(3,-4) 1e-8", lambda nb: rho(spec, (3, -4), 1e-8, nb).value),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1024, help="block edge length")
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba is disabled or missing; only the numpy path can be timed")
    print(f"{'kernel':<16}{'numpy s':>12}{'numba s':>12}{'speed-up':>10}{'max rel diff':>15}")
    for name, fn in cases(args.size, args.alpha):
        t_np, r_np = best_of(lambda: fn(False), args.repeat)
        if HAS_NUMBA:
            t_nb, r_nb = best_of(lambda: fn(True), args.repeat)
            print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{rel_diff(r_nb, r_np):>15.2e}")
        else:
            print(f"{name:<16}{t_np:>12.4f}{'-':>12}{'-':>10}{'-':>15}")


if __name__ == "__main__":
    main()
