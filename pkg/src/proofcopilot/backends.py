"""Numeric kernels with a numba fast path and a pure-numpy fallback.

Two hot kernels live here: batched row/query dot products for premise
scoring, and the byte-trigram FNV-1a histogram behind the hash encoder.
Both exist twice, once @njit-compiled and once vectorized numpy, selected
by the PROOFCOPILOT_BACKEND environment variable ("numba", "numpy", or
"auto", the default). The two paths are kept bit-identical: dot products
accumulate in float64 and round to float32 once, and the histogram is
integer arithmetic throughout.

The selection is resolved once per process on first use. benchmarks/
compares the two paths side by side.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

ENV_FLAG = "PROOFCOPILOT_BACKEND"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_active: str | None = None


def _numba_importable() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend() -> str:
    """Resolve the backend once: "numba" or "numpy"."""
    global _active
    if _active is None:
        choice = os.environ.get(ENV_FLAG, "auto").strip().lower()
        if choice not in {"auto", "numba", "numpy"}:
            warnings.warn(f"{ENV_FLAG}={choice!r} not recognized, using auto")
            choice = "auto"
        if choice == "numpy":
            _active = "numpy"
        elif choice == "numba" and not _numba_importable():
            warnings.warn("numba requested but not importable, falling back to numpy")
            _active = "numpy"
        elif choice == "numba":
            _active = "numba"
        else:
            _active = "numba" if _numba_importable() else "numpy"
    return _active


def _reset_backend_cache() -> None:
    """Forget the resolved backend (test hook)."""
    global _active
    _active = None


# ---------------------------------------------------------------------------
# Row scoring


def score_rows_numpy(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    m = np.ascontiguousarray(matrix, dtype=np.float32).astype(np.float64)
    v = np.ascontiguousarray(vector, dtype=np.float32).astype(np.float64)
    return (m @ v).astype(np.float32)


_score_rows_jit = None


def _get_score_rows_jit():
    global _score_rows_jit
    if _score_rows_jit is None:
        from numba import njit

        @njit(cache=True)
        def kernel(m, v):
            n, d = m.shape
            out = np.empty(n, dtype=np.float32)
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    acc += np.float64(m[i, j]) * np.float64(v[j])
                out[i] = acc
            return out

        _score_rows_jit = kernel
    return _score_rows_jit


def score_rows_numba(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    m = np.ascontiguousarray(matrix, dtype=np.float32)
    v = np.ascontiguousarray(vector, dtype=np.float32)
    return _get_score_rows_jit()(m, v)


def score_rows(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Per-row dot products of a float32 (n, d) matrix against a (d,) query.

    Accumulates each row in float64 and rounds to float32 once at the end,
    identically on both backends.
    """
    if matrix.ndim != 2 or vector.ndim != 1 or matrix.shape[1] != vector.shape[0]:
        raise ValueError(
            f"shape mismatch: matrix {matrix.shape} versus vector {vector.shape}"
        )
    if active_backend() == "numba":
        return score_rows_numba(matrix, vector)
    return score_rows_numpy(matrix, vector)


# ---------------------------------------------------------------------------
# Trigram histogram


def trigram_histogram_numpy(data: bytes, dim: int) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8)
    n = arr.shape[0] - 2
    if n <= 0:
        return np.zeros(dim, dtype=np.int64)
    offset = np.uint64(_FNV_OFFSET)
    prime = np.uint64(_FNV_PRIME)
    with np.errstate(over="ignore"):
        h = np.full(n, offset, dtype=np.uint64)
        for k in range(3):
            h = (h ^ arr[k : k + n].astype(np.uint64)) * prime
        idx = h % np.uint64(dim)
    return np.bincount(idx, minlength=dim).astype(np.int64)


_trigram_jit = None


def _get_trigram_jit():
    global _trigram_jit
    if _trigram_jit is None:
        from numba import njit

        @njit(cache=True)
        def kernel(arr, dim):
            hist = np.zeros(dim, dtype=np.int64)
            n = arr.shape[0] - 2
            for i in range(n):
                h = np.uint64(_FNV_OFFSET)
                for k in range(3):
                    h = (h ^ np.uint64(arr[i + k])) * np.uint64(_FNV_PRIME)
                hist[h % np.uint64(dim)] += 1
            return hist

        _trigram_jit = kernel
    return _trigram_jit


def trigram_histogram_numba(data: bytes, dim: int) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8)
    if arr.shape[0] < 3:
        return np.zeros(dim, dtype=np.int64)
    return _get_trigram_jit()(arr, dim)


def trigram_histogram(data: bytes, dim: int) -> np.ndarray:
    """Count FNV-1a-64 hashes (mod dim) of every 3-byte window of data."""
    if dim < 1:
        raise ValueError("dim must be positive")
    if active_backend() == "numba":
        return trigram_histogram_numba(data, dim)
    return trigram_histogram_numpy(data, dim)
