"""Trajectory similarity: normalized MSE and (Fast)DTW."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_points, check_same_shape, diameter
from .exceptions import InputError

DEFAULT_RADIUS = 1
# Sequences at most this long are aligned exactly.
EXACT_MAX_LEN = 64


def normalized_mse(a, b):
    """Mean squared pointwise distance over the squared diameter of ``b``."""
    a = check_points(a, name="a")
    b = check_points(b, name="b")
    check_same_shape(a, b)
    span = diameter(b)
    if span == 0.0:
        raise InputError("reference point set has zero diameter")
    return float(np.mean(np.sum((a - b) ** 2, axis=1)) / span**2)


@dataclass(frozen=True)
class DtwScore:
    """Result of a warping alignment.

    ``normalized`` is ``raw / (path_length * scale)`` where ``scale`` is the
    diameter used for normalization (by default the diameter of both
    sequences together, which keeps the score symmetric).
    """

    raw: float
    normalized: float
    path_length: int
    radius: int
    scale: float = 0.0
    path: tuple = ()

    def to_dict(self):
        return {
            "raw": self.raw,
            "normalized": self.normalized,
            "path_length": self.path_length,
            "radius": self.radius,
            "scale": self.scale,
        }


def _cost(a, b, i, j):
    d = a[i] - b[j]
    return float(np.sqrt(d @ d))


def _windowed_dtw(a, b, lo, hi):
    """DTW restricted to cells ``lo[i] <= j <= hi[i]``; returns (cost, path)."""
    n = len(a)
    inf = float("inf")
    D = []
    for i in range(n):
        row_lo, row_hi = lo[i], hi[i]
        dists = np.sqrt(np.sum((b[row_lo:row_hi + 1] - a[i]) ** 2, axis=1)).tolist()
        row = [inf] * (row_hi - row_lo + 1)
        prev = D[i - 1] if i else None
        p_lo = lo[i - 1] if i else 0
        p_hi = hi[i - 1] if i else -1
        for k, j in enumerate(range(row_lo, row_hi + 1)):
            if i == 0 and j == 0:
                row[k] = dists[k]
                continue
            best = inf
            if prev is not None:
                if p_lo <= j <= p_hi:
                    best = prev[j - p_lo]
                if p_lo <= j - 1 <= p_hi and prev[j - 1 - p_lo] < best:
                    best = prev[j - 1 - p_lo]
            if k and row[k - 1] < best:
                best = row[k - 1]
            row[k] = dists[k] + best
        D.append(row)
    total = D[n - 1][hi[n - 1] - lo[n - 1]]
    if not np.isfinite(total):
        raise InputError("warping window does not connect the sequence ends")

    def value(i, j):
        if i < 0 or j < lo[i] or j > hi[i]:
            return inf
        return D[i][j - lo[i]]

    path = [(n - 1, len(b) - 1)]
    i, j = n - 1, len(b) - 1
    while (i, j) != (0, 0):
        # Diagonal first, then the two axis moves in a fixed order.
        options = ((value(i - 1, j - 1), i - 1, j - 1), (value(i - 1, j), i - 1, j), (value(i, j - 1), i, j - 1))
        _, i, j = min(options, key=lambda o: o[0])
        path.append((i, j))
    path.reverse()
    return total, path


def dtw(a, b):
    """Exact DTW with Euclidean point cost; returns ``(cost, path)``."""
    a = check_points(a, name="a", allow_1d=False)
    b = check_points(b, name="b", n_dims=a.shape[1])
    m = len(b)
    return _windowed_dtw(a, b, [0] * len(a), [m - 1] * len(a))


def _coarsen(x):
    n = len(x)
    half = x[: n - n % 2].reshape(-1, 2, x.shape[1]).mean(axis=1)
    if n % 2:
        half = np.vstack([half, x[-1:]])
    return half


def _expand_window(path, n, m, radius):
    lo = [m] * n
    hi = [-1] * n
    for ci, cj in path:
        for di in range(-radius, radius + 1):
            for dj in range(-radius, radius + 1):
                i0, j0 = ci + di, cj + dj
                if i0 < 0 or j0 < 0:
                    continue
                for i in (2 * i0, 2 * i0 + 1):
                    if i >= n:
                        continue
                    for j in (2 * j0, 2 * j0 + 1):
                        if j >= m:
                            continue
                        if j < lo[i]:
                            lo[i] = j
                        if j > hi[i]:
                            hi[i] = j
    # Fill gaps so every row is non-empty and rows overlap their predecessor.
    for i in range(n):
        if hi[i] < 0:
            lo[i], hi[i] = lo[i - 1], hi[i - 1]
    lo[0] = 0
    hi[n - 1] = m - 1
    for i in range(1, n):
        lo[i] = min(lo[i], hi[i - 1] + 1 if hi[i - 1] + 1 < m else m - 1)
        lo[i] = max(lo[i], lo[i - 1])
    for i in range(n - 2, -1, -1):
        hi[i] = max(hi[i], lo[i + 1] - 1)
        hi[i] = min(hi[i], hi[i + 1])
    return lo, hi


def _fast(a, b, radius):
    if len(a) <= max(EXACT_MAX_LEN, radius + 2) or len(b) <= max(EXACT_MAX_LEN, radius + 2):
        return _windowed_dtw(a, b, [0] * len(a), [len(b) - 1] * len(a))
    _, coarse_path = _fast(_coarsen(a), _coarsen(b), radius)
    lo, hi = _expand_window(coarse_path, len(a), len(b), radius)
    return _windowed_dtw(a, b, lo, hi)


def fast_dtw(a, b, radius=DEFAULT_RADIUS, scale=None):
    """Approximate DTW (FastDTW) between two sequences of points.

    The sequences are recursively halved, aligned at the coarse level, and
    the coarse path, widened by ``radius`` cells, bounds the search at the
    next finer level.

    Parameters
    ----------
    a, b : array-like of shape (len, n)
    radius : int
    scale : float, optional
        Length used to normalize the score; defaults to the diameter of the
        union of both sequences.
    """
    A = check_points(a, name="a", allow_1d=True)
    B = check_points(b, name="b", allow_1d=True)
    if A.shape[1] != B.shape[1]:
        raise InputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    radius = int(radius)
    if radius < 0:
        raise InputError("radius must be non-negative")
    raw, path = _fast(A, B, radius)
    if scale is None:
        scale = diameter(np.vstack([A, B]))
    scale = float(scale)
    normalized = raw / (len(path) * scale) if scale > 0 else 0.0
    return DtwScore(float(raw), float(normalized), len(path), radius, scale, tuple(path))
