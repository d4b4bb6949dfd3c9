"""Input validation helpers.

Small checked-conversion utilities used at every public entry point, in
the spirit of scikit-learn's ``check_array``: convert to a contiguous
float/int ndarray, enforce dimensionality, and reject non-finite values
early with a readable message.
"""

import numpy as np

from .exceptions import ShapeMismatch


def as_matrix(x, name="matrix", dtype=float, allow_empty=False):
    """Convert ``x`` to a 2-D ndarray, rejecting NaN/inf entries."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not allow_empty and arr.size == 0:
        raise ShapeMismatch(f"{name} must be nonempty")
    if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def as_vector(x, name="vector", dtype=float):
    """Convert ``x`` to a 1-D ndarray, rejecting NaN/inf entries."""
    arr = np.asarray(x, dtype=dtype).ravel()
    if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def check_positive_int(value, name, minimum=1):
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value}")
    return value


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite nonnegative real, got {value}")
    return value


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite positive real, got {value}")
    return value


def check_simplex_rows(p, name, atol=1e-8):
    """Validate that every row of ``p`` is a probability vector."""
    p = as_matrix(p, name)
    if np.any(p < -atol):
        raise ValueError(f"{name} has negative entries")
    sums = p.sum(axis=1)
    if not np.allclose(sums, 1.0, atol=atol):
        raise ValueError(f"{name} rows must sum to 1, got sums {sums}")
    return np.clip(p, 0.0, None)


def check_column_stochastic(a, name, atol=1e-8):
    """Validate that ``a`` (stacked K x M x M) has column-stochastic slices."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        a = a[None, :, :]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ShapeMismatch(f"{name} must be K x M x M")
    if np.any(a < -atol):
        raise ValueError(f"{name} has negative entries")
    sums = a.sum(axis=1)
    if not np.allclose(sums, 1.0, atol=atol):
        raise ValueError(f"{name} columns must sum to 1")
    return np.clip(a, 0.0, None)
