"""Time the numba and numpy kernel backends on document-sized inputs.

    python3 benchmarks/bench_kernels.py [--size 1024] [--repeat 5]

Outputs are checked for bit-identity before timing. The first numba call
(compilation, or cache load) is excluded.
"""
import argparse
import timeit

import numpy as np

from srbin import kernels
from srbin._accel import USE_NUMBA
from srbin.metrics import gaussian_taps
from srbin.resample import axis_weights


def cases(size, rng):
    img = rng.integers(0, 256, size=(size, size)).astype(np.float64)
    idx, wts = axis_weights(size, 2 * size, "bicubic")
    sums, sq = kernels.integral_images(img.astype(np.int64))
    return {
        "resample_axis": (img, idx, wts),
        "window_stats": (sums, sq, 12),
        "filter_valid": (img, gaussian_taps()),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled or missing; nothing to compare")
        return

    rng = np.random.default_rng(0)
    print(f"{'kernel':<15}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, call_args in cases(args.size, rng).items():
        fast = kernels.IMPLEMENTATIONS["numba"][name]
        slow = kernels.IMPLEMENTATIONS["numpy"][name]
        a, b = fast(*call_args), slow(*call_args)
        a, b = (a, b) if isinstance(a, tuple) else ((a,), (b,))
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), name
        t_nb = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<15}{t_nb * 1e3:>12.2f}{t_np * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
