"""Input validation helpers shared by the estimator API."""

from __future__ import annotations

import numpy as np


def check_positions(X) -> np.ndarray:
    """Coerce receiver positions to a finite (n_samples, 3) float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and X.shape == (3,):
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"positions must have shape (n_samples, 3), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("positions contain non-finite values")
    return X


def check_spectra(X, n_orders: int | None = None) -> np.ndarray:
    """Validate a stacked spectra matrix (n_samples, n_orders).

    Rows are descending non-negative singular values; all-NaN rows mark
    uncovered sites and pass through untouched.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"spectra must have shape (n_samples, n_orders), got {X.shape}")
    if n_orders is not None and X.shape[1] != n_orders:
        raise ValueError(f"expected {n_orders} singular values per row, got {X.shape[1]}")
    nan_mask = np.isnan(X)
    row_nan = nan_mask.any(axis=1)
    if np.any(row_nan & ~nan_mask.all(axis=1)):
        raise ValueError("rows must be fully NaN (uncovered) or fully finite")
    finite = X[~row_nan]
    if finite.size:
        if np.any(finite < 0) or np.any(np.isinf(finite)):
            raise ValueError("singular values must be finite and non-negative")
        if np.any(np.diff(finite, axis=1) > 1e-9 * np.maximum(finite[:, :1], 1e-300)):
            raise ValueError("singular values must be sorted in descending order")
    return X


def check_unit_vector(v, name: str = "vector") -> np.ndarray:
    """Normalize a nonzero 3-vector, rejecting degenerate input."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm < 1e-12:
        raise ValueError(f"{name} must be a finite nonzero vector")
    return v / norm
