"""Small input-validation helpers in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .exceptions import InputError


def check_points(X, name="X", min_rows=1, n_dims=None, allow_1d=False):
    """Return ``X`` as a finite float64 array of shape ``(n_rows, n_dims)``.

    A 1-d input is promoted to a single row when ``allow_1d`` is set.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1 and allow_1d:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise InputError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if n_dims is not None and arr.shape[1] != n_dims:
        raise InputError(f"{name} must have {n_dims} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise InputError(f"{name} contains non-finite values (row {bad})")
    return arr


def check_vector(x, name="x", size=None):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be a vector, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise InputError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise InputError(
            f"{names[0]} and {names[1]} must have the same shape, "
            f"got {a.shape} and {b.shape}"
        )


def check_interval(value, name, low, high, low_open=True, high_open=True):
    """Raise unless ``value`` lies in the interval described by the flags."""
    v = float(value)
    lo_ok = v > low if low_open else v >= low
    hi_ok = v < high if high_open else v <= high
    if not (np.isfinite(v) and lo_ok and hi_ok):
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        raise InputError(f"{name}={value!r} outside {lb}{low}, {high}{rb}")
    return v


def diameter(points, chunk=2048):
    """Largest pairwise Euclidean distance within a point set."""
    from scipy.spatial.distance import cdist

    pts = np.asarray(points, dtype=float)
    best = 0.0
    for start in range(0, len(pts), chunk):
        block = cdist(pts[start:start + chunk], pts[start:])
        if block.size:
            best = max(best, float(block.max()))
    return best
