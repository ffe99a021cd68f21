"""Compare the compiled and numpy graded QR kernels on trace-sized batches.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from torsionstab import kernels
from torsionstab.catalog import EXAMPLE1
from torsionstab.linalg import derivative_batch


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_graded_qr_logdiag is None:
        print("compiled kernel not built; only the numpy kernel is available")

    rng = np.random.default_rng(0)
    cases = []
    for n, k, B in ((4, 4, 256), (6, 4, 256), (6, 7, 4096), (12, 6, 4096)):
        cases.append((f"random n={n} k={k} batch={B}", rng.normal(size=(B, n, k)), rng.normal(size=(B, n)) * 50))
    trace = derivative_batch(EXAMPLE1, np.ones(4), np.geomspace(1, 60, 256), 4)
    cases.append(("example trace n=4 k=4 batch=256", trace.mantissa, trace.row_log_scale))

    print(f"{'case':40s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, M, g in cases:
        tp = _best(lambda: kernels.python_graded_qr_logdiag(M, g), args.repeat)
        ref = kernels.python_graded_qr_logdiag(M, g)
        if kernels.compiled_graded_qr_logdiag is None:
            print(f"{name:40s} {tp * 1e3:10.3f} {'-':>12s}")
            continue
        tc = _best(lambda: kernels.compiled_graded_qr_logdiag(M, g), args.repeat)
        out = kernels.compiled_graded_qr_logdiag(M, g)
        fin = np.isfinite(ref)
        diff = np.max(np.abs(out[fin] - ref[fin]), initial=0.0)
        print(f"{name:40s} {tp * 1e3:10.3f} {tc * 1e3:12.3f} {tp / tc:8.1f} {diff:10.2g}")


if __name__ == "__main__":
    main()
