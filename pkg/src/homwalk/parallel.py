"""Trajectory-parallel map with results returned in trajectory order."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np


def _run_chunk(fn, indices, args):
    return [fn(t, *args) for t in indices]


def map_trajectories(fn: Callable, indices: Sequence[int], args: tuple = (), workers: int = 1) -> list:
    """Evaluate ``fn(t, *args)`` for every trajectory index ``t``.

    Each trajectory owns its random stream, so the output is the same for any
    ``workers``.  ``fn`` must be a module-level function when ``workers > 1``.
    """
    indices = list(indices)
    if workers <= 1 or len(indices) < 2:
        return _run_chunk(fn, indices, args)
    n_chunks = min(len(indices), 4 * workers)
    chunks = [list(c) for c in np.array_split(indices, n_chunks) if len(c)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, [fn] * len(chunks), chunks, [args] * len(chunks)):
            out.extend(part)
    return out


def fsum_rows(rows) -> np.ndarray:
    """Exactly rounded column sums; independent of the order of ``rows``."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        return np.array(math.fsum(arr))
    return np.array([math.fsum(col) for col in arr.T])


def fmean_rows(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    return fsum_rows(arr) / arr.shape[0]


def _sum_chunk(fn, indices, args):
    total = None
    for t in indices:
        part = fn(t, *args)
        total = part if total is None else tuple(a + b for a, b in zip(total, part))
    return total


def sum_trajectories(fn: Callable, indices: Sequence[int], args: tuple = (), workers: int = 1) -> tuple:
    """Elementwise sum over trajectories of the tuple of arrays ``fn(t, *args)``.

    Intended for integer counts, whose sums are exact in any order, so chunked
    parallel reduction reproduces the serial result bit for bit.
    """
    indices = list(indices)
    if workers <= 1 or len(indices) < 2:
        return _sum_chunk(fn, indices, args)
    n_chunks = min(len(indices), 4 * workers)
    chunks = [list(c) for c in np.array_split(indices, n_chunks) if len(c)]
    total = None
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_sum_chunk, [fn] * len(chunks), chunks, [args] * len(chunks)):
            total = part if total is None else tuple(a + b for a, b in zip(total, part))
    return total
