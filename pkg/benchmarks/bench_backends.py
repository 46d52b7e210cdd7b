"""Time the numba kernels against their pure-numpy fallbacks.

Runs both paths directly (bypassing the PROOFCOPILOT_BACKEND switch) on the
same inputs, checks they agree exactly, and prints best-of-N wall times.

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --repeats 20
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from proofcopilot.backends import (
    score_rows_numba,
    score_rows_numpy,
    trigram_histogram_numba,
    trigram_histogram_numpy,
)

SCORE_SHAPES = ((100, 64), (1000, 256), (5000, 256), (20000, 512))
TRIGRAM_SIZES = (256, 4096, 65536, 1 << 20)
DIM = 256


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def fmt(seconds: float) -> str:
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    return f"{seconds * 1e3:8.2f} ms"


def bench_score_rows(rng: np.random.Generator, repeats: int) -> None:
    print("score_rows: float32 row/query dot products, float64 accumulate")
    print(f"{'shape':>14}  {'numpy':>11}  {'numba':>11}  {'speedup':>7}")
    for rows, dim in SCORE_SHAPES:
        matrix = rng.standard_normal((rows, dim)).astype(np.float32)
        query = rng.standard_normal(dim).astype(np.float32)
        expected = score_rows_numpy(matrix, query)
        got = score_rows_numba(matrix, query)
        if not np.array_equal(expected, got):
            raise SystemExit(f"backend mismatch on score_rows {rows}x{dim}")
        t_np = best_of(lambda: score_rows_numpy(matrix, query), repeats)
        t_nb = best_of(lambda: score_rows_numba(matrix, query), repeats)
        shape = f"{rows}x{dim}"
        print(f"{shape:>14}  {fmt(t_np)}  {fmt(t_nb)}  {t_np / t_nb:6.2f}x")
    print()


def bench_trigrams(rng: np.random.Generator, repeats: int) -> None:
    print(f"trigram_histogram: FNV-1a over 3-byte windows, dim={DIM}")
    print(f"{'bytes':>14}  {'numpy':>11}  {'numba':>11}  {'speedup':>7}")
    for size in TRIGRAM_SIZES:
        data = rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
        expected = trigram_histogram_numpy(data, DIM)
        got = trigram_histogram_numba(data, DIM)
        if not np.array_equal(expected, got):
            raise SystemExit(f"backend mismatch on trigram_histogram size {size}")
        t_np = best_of(lambda: trigram_histogram_numpy(data, DIM), repeats)
        t_nb = best_of(lambda: trigram_histogram_numba(data, DIM), repeats)
        print(f"{size:>14}  {fmt(t_np)}  {fmt(t_nb)}  {t_np / t_nb:6.2f}x")
    print()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=10, help="timed runs per case")
    parser.add_argument("--seed", type=int, default=7, help="input generator seed")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)

    # trigger JIT compilation outside the timed region
    score_rows_numba(np.ones((2, 2), dtype=np.float32), np.ones(2, dtype=np.float32))
    trigram_histogram_numba(b"warmup bytes", DIM)

    bench_score_rows(rng, args.repeats)
    bench_trigrams(rng, args.repeats)


if __name__ == "__main__":
    main()
