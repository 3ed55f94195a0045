"""Benchmark the compiled kernels against the pure-Python fallback.

Both backends are bit-identical; this script shows what the extension buys.
Run: python benchmarks/bench_kernels.py [--sizes 20,40,80] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from groundtrack import _pure

try:
    from groundtrack import _native
except ImportError:
    _native = None


def time_call(fn, *args, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_iou(sizes: list[int], repeats: int) -> list[tuple[str, float, float]]:
    rows = []
    rng = np.random.default_rng(0)
    for n in sizes:
        boxes_a = np.column_stack(
            [rng.uniform(0, 1000, n), rng.uniform(0, 1000, n),
             rng.uniform(10, 80, n), rng.uniform(10, 80, n)]
        )
        boxes_b = np.column_stack(
            [rng.uniform(0, 1000, n), rng.uniform(0, 1000, n),
             rng.uniform(10, 80, n), rng.uniform(10, 80, n)]
        )
        pure_t = time_call(_pure.iou_matrix, boxes_a, boxes_b, repeats=repeats)
        native_t = (
            time_call(_native.iou_matrix, boxes_a, boxes_b, repeats=repeats)
            if _native
            else float("nan")
        )
        rows.append((f"iou_matrix {n}x{n}", pure_t, native_t))
    return rows


def bench_assignment(sizes: list[int], repeats: int) -> list[tuple[str, float, float]]:
    rows = []
    rng = np.random.default_rng(1)
    for n in sizes:
        # The padded square problem the assignment layer feeds the kernel.
        size = 2 * n
        prim = np.zeros((size, size))
        sec = np.zeros((size, size))
        adm = rng.uniform(0, 1, (n, n)) < 0.4
        prim[:n, :n][adm] = -1.0
        sec[:n, :n][adm] = rng.uniform(0, 1, (n, n))[adm]
        pure_t = time_call(_pure.lsap_pair, prim, sec, repeats=repeats)
        native_t = (
            time_call(_native.lsap_pair, prim, sec, repeats=repeats)
            if _native
            else float("nan")
        )
        rows.append((f"assignment {n}x{n} (padded {size})", pure_t, native_t))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="20,40,80")
    parser.add_argument("--iou-sizes", default="200,500,1000")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",") if s]
    iou_sizes = [int(s) for s in args.iou_sizes.split(",") if s]

    if _native is None:
        print("warning: compiled extension not importable; timing fallback only")

    rows = bench_iou(iou_sizes, args.repeats) + bench_assignment(sizes, args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(width)}  {'pure (s)':>10}  {'native (s)':>10}  {'speedup':>8}")
    for name, pure_t, native_t in rows:
        speedup = pure_t / native_t if native_t == native_t and native_t > 0 else float("nan")
        print(f"{name.ljust(width)}  {pure_t:10.4f}  {native_t:10.4f}  {speedup:7.1f}x")


if __name__ == "__main__":
    main()
