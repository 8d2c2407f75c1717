"""Input validation for the estimator interface."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import NonSquare
from .group import FiniteMeasure, make_measure


def check_matrices(X, min_dim: int = 2, max_dim: int = 8) -> np.ndarray:
    """Return ``X`` as a finite float array of shape (m, d, d).

    A single (d, d) matrix is promoted to a stack of one.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected an array of shape (m, d, d), got {arr.shape}")
    if arr.shape[1] != arr.shape[2]:
        raise NonSquare(f"matrices must be square, got {arr.shape[1:]}")
    if arr.shape[0] == 0:
        raise ValueError("at least one matrix is required")
    if not min_dim <= arr.shape[1] <= max_dim:
        raise ValueError(f"dimension must lie in [{min_dim}, {max_dim}], got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrices contain NaN or infinite entries")
    return arr


def check_sample_weight(sample_weight, n: int) -> np.ndarray:
    """Probability weights of length ``n``; uniform when ``sample_weight`` is None."""
    if sample_weight is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(sample_weight, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise ValueError(f"sample_weight has length {w.shape[0]}, expected {n}")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("sample_weight must be positive and finite")
    return w / w.sum()


def check_seed(random_state) -> int:
    """Master seed as a nonnegative integer; None means 0.

    Random streams are keyed by (seed, trajectory), so generator objects are
    not accepted.
    """
    if random_state is None:
        return 0
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool) and random_state >= 0:
        return int(random_state)
    raise ValueError(f"random_state must be a nonnegative integer or None, got {random_state!r}")


def measure_from_arrays(X, sample_weight=None) -> FiniteMeasure:
    mats = check_matrices(X)
    w = check_sample_weight(sample_weight, mats.shape[0])
    return make_measure(zip(w.tolist(), mats))


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
