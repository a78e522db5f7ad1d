"""Latent embedding from the spectrum of a multi-copy path-graph Laplacian.

The graph consists of ``K`` copies of an ``N``-node path whose last nodes
are joined into a cycle.  Its Laplacian is ``2I - J`` with ``J`` block
circulant, so the spectrum splits into ``K`` tridiagonal problems

    L_j = 2I - (B1 + 2 cos(2 pi j / K) B2),   j = 0 .. K-1,

and branches ``j`` and ``K - j`` coincide.  Each paired branch therefore
contributes eigenvalues of multiplicity two.  The smallest eigenvalue of
every paired branch lies below ``2 (1 - cos(pi / N))`` and its eigenvector
is monotone along the path, which is what makes it usable as a latent
coordinate.

Eigenvector entries have a closed form in Chebyshev polynomials of the
first and second kind evaluated at ``1 - lambda / 2``; with
``a = arccos(1 - lambda/2)`` and ``b = tan(a/2)`` the ``i``-th entry is
``cos(i a) - b sin(i a)``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_points, diameter
from .exceptions import EigenvalueShortfallError, InputError

DENSE_SIZE_LIMIT = 2000
# Relative displacement below which an aligned dimension is treated as constant.
DEGENERATE_DISPLACEMENT = 1e-9


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GraphSpec:
    """Size of the demonstration graph.

    Parameters
    ----------
    n_points : int
        Demonstration length ``N``.
    n_dims : int
        Ambient dimension ``n`` (number of latent coordinates).
    n_copies : int, optional
        Number of demonstration copies ``K``; defaults to ``n_dims + 1``.
    """

    n_points: int
    n_dims: int
    n_copies: int = None

    def __post_init__(self):
        if self.n_copies is None:
            object.__setattr__(self, "n_copies", int(self.n_dims) + 1)
        for name, low in (("n_points", 3), ("n_dims", 2), ("n_copies", 3)):
            value = getattr(self, name)
            if int(value) != value or value < low:
                raise InputError(f"{name} must be an integer >= {low}, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def bound(self):
        return eigenvalue_bound(self.n_points)


@dataclass(frozen=True)
class SpectralSelection:
    """Eigenvalues picked as latent coordinates, one per dimension.

    ``eigenvalues`` is sorted ascending and may repeat; ``multiplicities``
    gives the repeat count of each distinct value in order.  ``branches``
    records which circulant branch ``j`` produced each entry.
    """

    eigenvalues: tuple
    multiplicities: tuple
    bound: float
    n_copies: int
    branches: tuple = ()

    @property
    def distinct(self):
        return tuple(dict.fromkeys(self.eigenvalues))


@dataclass(frozen=True)
class LatentEmbedding:
    """Chebyshev latent coordinates for a demonstration of ``N`` points.

    Rows run from ``start`` (first row) to ``attractor`` (last row); the
    attractor row equals ``1 - lambda`` exactly.
    """

    points: np.ndarray
    selection: SpectralSelection
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    start: np.ndarray = field(repr=False)
    attractor: np.ndarray = field(repr=False)

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def n_dims(self):
        return self.points.shape[1]

    @property
    def eigenvalues(self):
        return np.asarray(self.selection.eigenvalues)


def eigenvalue_bound(n_points):
    """Strict upper bound ``2 (1 - cos(pi / N))`` on the selected eigenvalues."""
    # 4 sin^2(x/2) avoids cancellation in 1 - cos for large N.
    return 4.0 * np.sin(np.pi / (2.0 * n_points)) ** 2


def branch_tridiagonal(n_points, n_copies, branch):
    """Diagonal and off-diagonal of the ``N x N`` Laplacian block of ``branch``."""
    alpha = 2.0 * np.cos(2.0 * np.pi * branch / n_copies)
    diag = np.full(n_points, 2.0)
    diag[0] = 1.0
    diag[-1] = 3.0 - alpha
    off = np.full(n_points - 1, -1.0)
    return diag, off


def sturm_count(diag, off, x):
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``."""
    count = 0
    q = 1.0
    tiny = np.finfo(float).tiny
    for k in range(len(diag)):
        e2 = off[k - 1] ** 2 if k else 0.0
        q = diag[k] - x - (e2 / q if k else 0.0)
        if q == 0.0:
            q = -tiny
        if q < 0.0:
            count += 1
    return count


def smallest_eigenvalue(diag, off, lower=None, upper=None):
    """Smallest eigenvalue of a symmetric tridiagonal matrix by bisection.

    The interval is halved until it no longer shrinks in floating point,
    which is well past the 1e-12 the embedding needs.
    """
    diag = [float(d) for d in diag]
    off = [float(e) for e in off]
    radii = np.zeros(len(diag))
    radii[:-1] += np.abs(off)
    radii[1:] += np.abs(off)
    lo = float(np.min(np.asarray(diag) - radii)) if lower is None else float(lower)
    hi = float(np.max(np.asarray(diag) + radii)) if upper is None else float(upper)
    if sturm_count(diag, off, hi) < 1:
        raise InputError("upper bracket is below the smallest eigenvalue")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(diag, off, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def paired_branches(n_copies):
    """Branch indices ``j`` whose partner ``K - j`` is distinct."""
    return list(range(1, (n_copies + 1) // 2))


def repeated_count(n_copies):
    """Number of distinct multiplicity-two eigenvalues below the bound."""
    if n_copies % 2 == 0:
        return n_copies // 2 - 1
    return (n_copies - 1) // 2


def branch_minimum(n_points, n_copies, branch):
    diag, off = branch_tridiagonal(n_points, n_copies, branch)
    # Every L_j is positive semidefinite, so 0 is a valid lower bracket.
    return smallest_eigenvalue(diag, off, lower=0.0)


def paired_eigenvalues(n_points, n_copies):
    """Distinct repeating eigenvalues below the bound, ascending, with branches."""
    bound = eigenvalue_bound(n_points)
    found = []
    for j in paired_branches(n_copies):
        lam = branch_minimum(n_points, n_copies, j)
        if 0.0 < lam < bound:
            found.append((lam, j))
    found.sort()
    return found


def repeating_eigenvalues(spec):
    """Select ``n_dims`` small eigenvalues of the graph Laplacian.

    Paired branches supply each value twice.  When they fall one short
    (odd ``n_dims`` with even ``K``), the smallest eigenvalue of the unpaired
    branch ``j = K/2`` fills the last slot if it is under the bound.

    Raises
    ------
    EigenvalueShortfallError
        If fewer than ``n_dims`` eigenvalues qualify; use more copies.
    """
    n, K, N = spec.n_dims, spec.n_copies, spec.n_points
    bound = eigenvalue_bound(N)
    slots = []
    for lam, j in paired_eigenvalues(N, K):
        slots.extend([(lam, j), (lam, j)])
    slots = slots[:n]
    if len(slots) < n and K % 2 == 0:
        lam = branch_minimum(N, K, K // 2)
        if 0.0 < lam < bound:
            slots.append((lam, K // 2))
    if len(slots) < n:
        raise EigenvalueShortfallError(
            f"only {len(slots)} eigenvalues below {bound:.6e} for N={N}, K={K}; "
            f"{n} needed (increase the number of copies)",
            found=len(slots),
            needed=n,
        )
    slots.sort()
    values = tuple(float(v) for v, _ in slots)
    mult = []
    for v in values:
        if mult and mult[-1][0] == v:
            mult[-1][1] += 1
        else:
            mult.append([v, 1])
    return SpectralSelection(
        eigenvalues=values,
        multiplicities=tuple(m for _, m in mult),
        bound=float(bound),
        n_copies=K,
        branches=tuple(j for _, j in slots),
    )


def _angle(lam):
    # arccos(1 - lam/2) written to keep full relative precision for small lam.
    return 2.0 * np.arcsin(np.sqrt(lam) / 2.0)


def chebyshev_coordinate(i, lam):
    """``T_i(1 - lam/2) - (lam/2) V_{i-1}(1 - lam/2)`` via trigonometric forms.

    ``i`` may be an integer or an integer array (``i >= 1``); ``lam`` must lie
    in ``(0, 4)``.  For ``i = 1`` the exact value ``1 - lam`` is returned.
    """
    lam = float(lam)
    if not 0.0 < lam < 4.0:
        raise InputError(f"eigenvalue {lam!r} outside (0, 4)")
    idx = np.asarray(i)
    if np.any(idx < 1):
        raise InputError("index must be >= 1")
    a = _angle(lam)
    t_term = np.cos(idx * a)
    v_term = np.sin(idx * a) / np.sin(a)
    out = t_term - 0.5 * lam * v_term
    out = np.where(idx == 1, 1.0 - lam, out)
    return float(out) if np.ndim(out) == 0 else out


def build_embedding(spec):
    """Latent coordinates for ``spec``, ordered from start to attractor.

    When ``spec.n_copies`` was left at its default and the eigenvalue count
    falls short, the number of copies is increased until it suffices.
    """
    selection = _select_with_retry(spec)
    lam = np.asarray(selection.eigenvalues)
    N = spec.n_points
    rows = np.arange(1, N + 1)
    cols = [chebyshev_coordinate(rows, value) for value in lam]
    points = np.column_stack(cols)[::-1]
    a = _angle(lam)
    b = lam / (2.0 * np.sin(a))
    gamma = np.arcsin(1.0 / np.sqrt(b**2 + 1.0))
    return LatentEmbedding(
        points=_frozen(points),
        selection=selection,
        a=_frozen(a),
        b=_frozen(b),
        gamma=_frozen(gamma),
        start=_frozen(points[0]),
        attractor=_frozen(points[-1]),
    )


def _select_with_retry(spec, max_extra=4):
    defaulted = spec.n_copies == spec.n_dims + 1
    try:
        return repeating_eigenvalues(spec)
    except EigenvalueShortfallError:
        if not defaulted:
            raise
    for extra in range(1, max_extra + 1):
        bigger = GraphSpec(spec.n_points, spec.n_dims, spec.n_copies + extra)
        try:
            return repeating_eigenvalues(bigger)
        except EigenvalueShortfallError:
            if extra == max_extra:
                raise


def align_to_demo(embedding, demo):
    """Affinely map each latent column onto the demonstration's range.

    Column ``d`` is sent so that ``embedding.start`` lands on the first demo
    point and ``embedding.attractor`` on the last.  A demo dimension whose
    net displacement is negligible relative to the demo diameter is filled
    with the constant start value instead.
    """
    points = getattr(embedding, "points", None)
    if points is None:
        raise InputError("align_to_demo expects a LatentEmbedding")
    target = check_points(getattr(demo, "points", demo), name="demo")
    if target.shape != points.shape:
        raise InputError(
            f"embedding shape {points.shape} does not match demo shape {target.shape}"
        )
    y0, y1 = target[0], target[-1]
    x0, x1 = np.asarray(embedding.start), np.asarray(embedding.attractor)
    span = diameter(target)
    out = np.empty_like(target)
    for d in range(target.shape[1]):
        shift = y1[d] - y0[d]
        if abs(shift) <= DEGENERATE_DISPLACEMENT * span:
            out[:, d] = y0[d]
            continue
        scale = shift / (x1[d] - x0[d])
        out[:, d] = y0[d] + (points[:, d] - x0[d]) * scale
        # Pin the endpoints so they match the demo exactly.
        out[0, d] = y0[d]
        out[-1, d] = y1[d]
    return out


def dense_laplacian(spec):
    """Explicit ``(N K) x (N K)`` Laplacian of the multi-copy graph.

    Intended as a test oracle; refuses matrices larger than
    ``DENSE_SIZE_LIMIT`` rows.
    """
    N, K = spec.n_points, spec.n_copies
    size = N * K
    if size > DENSE_SIZE_LIMIT:
        raise InputError(f"dense Laplacian of size {size} exceeds {DENSE_SIZE_LIMIT}")
    adj = np.zeros((size, size))
    for k in range(K):
        base = k * N
        for i in range(N - 1):
            adj[base + i, base + i + 1] = adj[base + i + 1, base + i] = 1.0
        # Last nodes of neighbouring copies form a cycle.
        nxt = ((k + 1) % K) * N
        adj[base + N - 1, nxt + N - 1] = adj[nxt + N - 1, base + N - 1] = 1.0
    return np.diag(adj.sum(axis=1)) - adj


def write_matrix_csv(matrix, path):
    """Dump a matrix as row-major CSV with round-trip precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix, dtype=float):
            writer.writerow([repr(float(v)) for v in row])
