"""Shared numerical helpers: stable softmax family and simplex checks."""

from __future__ import annotations

import numpy as np

# Floor applied to probabilities before any log; keeps -log finite while
# biasing results by less than 1e-12 in double precision.
PROB_FLOOR = 1e-12


def stable_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax with the max subtracted first so exp never overflows."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """log(softmax(z)) computed via the log-sum-exp identity (no flooring)."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - np.max(z, axis=axis, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    return shifted - lse


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def check_prob_vector(p: np.ndarray, n_classes: int | None = None, atol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector (nonnegative, sums to 1 within atol).

    Returns the input as a float64 array; raises ValueError otherwise.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probability vector must be 1-D, got shape {p.shape}")
    if n_classes is not None and p.shape[0] != n_classes:
        raise ValueError(f"expected {n_classes} classes, got {p.shape[0]}")
    if np.any(p < -atol):
        raise ValueError("probability vector has negative entries")
    s = float(p.sum())
    if abs(s - 1.0) > atol:
        raise ValueError(f"probability vector sums to {s}, not 1")
    return p
