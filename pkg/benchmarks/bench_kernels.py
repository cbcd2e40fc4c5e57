"""Time the numba and numpy kernel backends on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--optimizer]

Each kernel is called once before timing so numba compilation is excluded.
The optional ``--optimizer`` run times a full discrete-input solve at
n_r = 1, P = 1 under both backends.
"""
import argparse
import time

import numpy as np

from ncrayleigh import kernels
from ncrayleigh.discrete import OutputGrid, optimize_discrete_input


def workloads():
    rng = np.random.default_rng(1)
    grid = OutputGrid(4, 30.0)
    x = np.sort(rng.uniform(0.0, 10.0, 8))
    logc = grid.log_conditional(x)
    log_p = np.log(np.full(x.size, 1.0 / x.size))
    log_mix = kernels.mixture_from_matrix(logc, log_p)
    y = np.linspace(1e-3, 20.0, 20_000)
    var = 1.0 + x * x
    coef = log_p - 4 * np.log(var)
    h = rng.standard_normal((2, 4096, 4, 2))
    return {
        "mixture_log_pdf": lambda: kernels.mixture_log_pdf(y, coef, 0.5 / var, 7.0, -1.0),
        "conditional_log_matrix": lambda: kernels.conditional_log_matrix(grid.log_y, var, 4, -1.0),
        "mixture_from_matrix": lambda: kernels.mixture_from_matrix(logc, log_p),
        "relative_entropies": lambda: kernels.relative_entropies(logc, log_mix, grid.weights),
        "log_det_batch": lambda: kernels.log_det_batch(h[0], h[1], 0.5),
    }


def best_of(fn, repeat, inner):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--inner", type=int, default=20)
    ap.add_argument("--optimizer", action="store_true", help="also time a full discrete solve")
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    times = {}
    for name in backends:
        kernels.set_backend(name)
        for kernel, fn in workloads().items():
            times[kernel, name] = best_of(fn, args.repeat, args.inner)
        if args.optimizer:
            optimize_discrete_input(1, 1.0)
            t0 = time.perf_counter()
            optimize_discrete_input(1, 1.0)
            times["optimize_discrete_input", name] = time.perf_counter() - t0

    print(f"{'kernel':26s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for kernel in dict.fromkeys(k for k, _ in times):
        t_np = times[kernel, "numpy"] * 1e3
        if (kernel, "numba") in times:
            t_nb = times[kernel, "numba"] * 1e3
            print(f"{kernel:26s} {t_np:12.3f} {t_nb:12.3f} {t_np / t_nb:8.2f}")
        else:
            print(f"{kernel:26s} {t_np:12.3f} {'-':>12s} {'-':>8s}")


if __name__ == "__main__":
    main()
