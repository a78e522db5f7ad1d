"""Invertible deformations built from Gaussian kernel translations.

Each layer moves space by ``psi(x) = x + k(x) v`` with
``k(x) = exp(-|x - c|^2 / (2 sigma^2))``.  The kernel's steepest slope is
``exp(-1/2) / sigma`` (reached at distance ``sigma``), so keeping
``|v| <= mu * sigma * exp(1/2)`` makes the perturbation ``mu``-Lipschitz
with ``mu < 1``; the layer is then a global diffeomorphism with Jacobian
determinant at least ``1 - mu``.

Layers are fitted greedily: every step grabs the point that is furthest
from its target and pushes a bump towards it.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_interval, check_points, check_same_shape, diameter
from .exceptions import InputError, InversionError
from .metrics import normalized_mse  # noqa: F401  (re-exported)

FORMAT_VERSION = 1
SQRT_E = float(np.exp(0.5))
DEFAULT_MSE_STOP = 1e-5
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class DiffeoLayer:
    center: np.ndarray
    translation: np.ndarray
    width: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        v = np.array(self.translation, dtype=float)
        if c.shape != v.shape or c.ndim != 1:
            raise InputError("center and translation must be vectors of equal length")
        if not (np.isfinite(self.width) and self.width > 0):
            raise InputError(f"width must be positive, got {self.width!r}")
        c.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "translation", v)
        object.__setattr__(self, "width", float(self.width))

    @property
    def lipschitz(self):
        """Lipschitz constant of the perturbation ``k(x) v``."""
        return float(np.linalg.norm(self.translation)) / (SQRT_E * self.width)

    def kernel(self, X):
        d = X - self.center
        return np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * self.width**2))

    def apply(self, X):
        return X + self.kernel(X)[:, None] * self.translation

    def jacobian(self, X):
        """Per-point Jacobians ``I + v grad k^T``, shape ``(m, n, n)``."""
        k = self.kernel(X)
        grad = -(X - self.center) * (k / self.width**2)[:, None]
        eye = np.eye(X.shape[1])
        return eye + self.translation[None, :, None] * grad[:, None, :]

    def invert(self, Y, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        """Solve ``apply(X) = Y`` for ``X`` row by row.

        The fixed-point map ``x -> y - k(x) v`` contracts with modulus at most
        the layer's Lipschitz constant.  Rows still above ``tol`` after
        ``max_iter`` sweeps are finished by safeguarded Newton steps on the
        scalar kernel weight, which is monotone in the unknown.
        """
        X = Y.copy()
        for _ in range(max_iter):
            X_new = Y - self.kernel(X)[:, None] * self.translation
            step = np.abs(X_new - X).max(axis=1)
            X = X_new
            if np.all(step <= tol):
                return X
        resid = np.abs(self.apply(X) - Y).max(axis=1)
        slow = np.flatnonzero(resid > tol)
        for row in slow:
            X[row] = self._newton_row(Y[row], tol)
        return X

    def _newton_row(self, y, tol):
        # Unknown s = k(x) with x = y - s v: solve f(s) = s - k(y - s v) = 0 on [0, 1].
        v, c, w2 = self.translation, self.center, self.width**2
        lo, hi = 0.0, 1.0
        s = float(self.kernel(y[None, :])[0])
        for _ in range(200):
            x = y - s * v
            kx = float(np.exp(-np.dot(x - c, x - c) / (2.0 * w2)))
            f = s - kx
            if f > 0:
                hi = s
            else:
                lo = s
            deriv = 1.0 - kx * np.dot(x - c, v) / w2
            s_new = s - f / deriv if deriv > 0 else 0.5 * (lo + hi)
            if not lo <= s_new <= hi:
                s_new = 0.5 * (lo + hi)
            if abs(s_new - s) * np.abs(v).max(initial=0.0) <= tol * 1e-2:
                s = s_new
                break
            s = s_new
        return y - s * v

    def to_dict(self):
        return {
            "center": [float(x) for x in self.center],
            "translation": [float(x) for x in self.translation],
            "width": float(self.width),
        }


@dataclass(frozen=True)
class DiffeoModel:
    """Composition of layers, applied first to last, with its fit record.

    ``source_meta`` and ``target_meta`` hold JSON-compatible descriptions of
    the point sets the model was fitted on (sizes, provenance, and for
    pipeline models the latent attractor).
    """

    layers: tuple
    mu: float
    beta: float
    n_dims: int
    normalized_mse: float = 0.0
    history: tuple = ()
    source_meta: dict = field(default_factory=dict, compare=False)
    target_meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_layers(self):
        return len(self.layers)

    def truncated(self, n_layers):
        """The model made of the first ``n_layers`` layers."""
        n_layers = min(int(n_layers), self.n_layers)
        mse = self.history[n_layers] if len(self.history) > n_layers else self.normalized_mse
        return DiffeoModel(
            tuple(self.layers[:n_layers]), self.mu, self.beta, self.n_dims, mse,
            tuple(self.history[: n_layers + 1]), dict(self.source_meta), dict(self.target_meta),
        )

    def to_dict(self):
        return {
            "format": "chebds.diffeo",
            "version": FORMAT_VERSION,
            "mu": float(self.mu),
            "beta": float(self.beta),
            "n_dims": int(self.n_dims),
            "normalized_mse": float(self.normalized_mse),
            "history": [float(h) for h in self.history],
            "layers": [layer.to_dict() for layer in self.layers],
            "source_meta": dict(self.source_meta),
            "target_meta": dict(self.target_meta),
        }

    def to_json(self):
        # json emits repr() of floats, which round-trips exactly.
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != "chebds.diffeo":
            raise InputError("not a diffeomorphism model document")
        if doc.get("version") != FORMAT_VERSION:
            raise InputError(f"unsupported model version {doc.get('version')!r}")
        try:
            layers = tuple(
                DiffeoLayer(np.array(l["center"]), np.array(l["translation"]), l["width"])
                for l in doc["layers"]
            )
            return cls(
                layers=layers,
                mu=float(doc["mu"]),
                beta=float(doc["beta"]),
                n_dims=int(doc["n_dims"]),
                normalized_mse=float(doc["normalized_mse"]),
                history=tuple(float(h) for h in doc.get("history", ())),
                source_meta=dict(doc.get("source_meta", {})),
                target_meta=dict(doc.get("target_meta", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed model document: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"model file is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read model {path}: {exc}") from exc


GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class _LayerSearch:
    """Error of a candidate layer as a function of log-width.

    The layer is centred on point ``idx`` and translates by ``beta`` times
    that point's residual, shrunk when needed so the translation respects
    ``|v| <= mu * sigma * exp(1/2)``.
    """

    def __init__(self, current, target, idx, mu, beta, span2):
        self.current = current
        self.target = target
        self.center = current[idx].copy()
        self.v0 = beta * (target[idx] - current[idx])
        self.vnorm = float(np.linalg.norm(self.v0))
        self.mu = mu
        self.span2 = span2
        d = current - self.center
        self.d2 = np.einsum("ij,ij->i", d, d)

    def layer(self, log_width):
        width = float(np.exp(log_width))
        cap = self.mu * width * SQRT_E
        v = self.v0 if self.vnorm <= cap else self.v0 * (cap / self.vnorm)
        return DiffeoLayer(self.center, v, width)

    def evaluate(self, log_width):
        layer = self.layer(log_width)
        k = np.exp(-self.d2 / (2.0 * layer.width**2))
        moved = self.current + k[:, None] * layer.translation
        sq = np.sum((self.target - moved) ** 2, axis=1)
        return float(sq.mean() / self.span2), layer, moved, sq


def fit(source, target, mu=0.9, beta=0.5, max_layers=100, mse_stop=DEFAULT_MSE_STOP,
        width_range=(1e-3, 2.0), width_grid=30, refine_steps=25):
    """Greedily fit layers so that the model maps ``source`` onto ``target``.

    Each layer is centred on the currently worst-matched point (lowest index
    on ties) and pushes it by ``beta`` times its residual, capped by the
    invertibility bound scaled by ``mu``.  The kernel width is chosen to
    minimise the resulting error: a log-spaced scan over ``width_range``
    (as multiples of the target diameter) followed by golden-section
    refinement around the best scan point.  A layer that would not lower
    the error is never kept.  Fitting stops after ``max_layers`` layers,
    once the normalized MSE is at most ``mse_stop``, or when no width
    improves the match.

    Returns
    -------
    DiffeoModel
        ``history[m]`` is the normalized MSE after ``m`` layers.
    """
    X = check_points(source, name="source")
    Y = check_points(target, name="target")
    check_same_shape(X, Y, ("source", "target"))
    mu = check_interval(mu, "mu", 0.0, 1.0)
    beta = check_interval(beta, "beta", 0.0, 1.0, high_open=False)
    if int(max_layers) != max_layers or max_layers < 0:
        raise InputError(f"max_layers must be a non-negative integer, got {max_layers!r}")
    lo_frac, hi_frac = (float(w) for w in width_range)
    if not 0.0 < lo_frac < hi_frac or int(width_grid) < 2:
        raise InputError("width_range must be increasing and positive, width_grid >= 2")

    span = diameter(Y)
    if span == 0.0:
        raise InputError("target has zero diameter")
    span2 = span**2
    grid = np.linspace(np.log(lo_frac * span), np.log(hi_frac * span), int(width_grid))
    current = X.copy()
    sq = np.sum((Y - current) ** 2, axis=1)
    mse = float(sq.mean() / span2)
    history = [mse]
    layers = []
    while len(layers) < max_layers and mse > mse_stop:
        search = _LayerSearch(current, Y, int(np.argmax(sq)), mu, beta, span2)
        if search.vnorm == 0.0:
            break
        scores = [search.evaluate(w)[0] for w in grid]
        k = int(np.argmin(scores))
        best = search.evaluate(grid[k])
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        for _ in range(refine_steps):
            c1 = b - GOLDEN * (b - a)
            c2 = a + GOLDEN * (b - a)
            if search.evaluate(c1)[0] < search.evaluate(c2)[0]:
                b = c2
            else:
                a = c1
        polished = search.evaluate(0.5 * (a + b))
        if polished[0] < best[0]:
            best = polished
        if not best[0] < mse:
            break
        mse, layer, current, sq = best
        layers.append(layer)
        history.append(mse)
    return DiffeoModel(
        layers=tuple(layers), mu=mu, beta=beta, n_dims=X.shape[1],
        normalized_mse=mse, history=tuple(history),
    )


def forward(model, x):
    """Push points through every layer in order; accepts a vector or rows."""
    X, single = _as_rows(x, model.n_dims)
    for layer in model.layers:
        X = layer.apply(X)
    return X[0] if single else X


def inverse(model, y, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Undo :func:`forward` layer by layer, last layer first.

    Raises
    ------
    InversionError
        If the composed round trip misses ``y`` by more than ``tol``
        (scaled by the magnitude of ``y``).
    """
    Y, single = _as_rows(y, model.n_dims)
    X = Y
    for layer in reversed(model.layers):
        X = layer.invert(X, tol=tol, max_iter=max_iter)
    if model.layers:
        resid = float(np.abs(forward(model, X) - Y).max())
        scale = max(1.0, float(np.abs(Y).max()))
        if not resid <= tol * 100 * scale:
            raise InversionError(f"inversion residual {resid:.3e} exceeds tolerance", resid)
    return X[0] if single else X


def jacobian(model, x):
    """Jacobian of :func:`forward`; shape ``(n, n)`` or ``(m, n, n)`` for rows."""
    X, single = _as_rows(x, model.n_dims)
    J = np.broadcast_to(np.eye(model.n_dims), (X.shape[0], model.n_dims, model.n_dims)).copy()
    for layer in model.layers:
        J = layer.jacobian(X) @ J
        X = layer.apply(X)
    return J[0] if single else J


def _as_rows(x, n_dims):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = check_points(arr, name="x", n_dims=n_dims, allow_1d=True)
    return arr, single
