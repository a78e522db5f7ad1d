"""scikit-learn style estimators wrapping the embedding, deformation and dynamics.

>>> from chebds import ChebyshevDS, unstable_spiral
>>> demo = unstable_spiral(c=1, n_samples=500)
>>> ds = ChebyshevDS(mu=0.6, beta=0.9, max_layers=50).fit(demo.points)
>>> trace = ds.rollout(demo.points[0])
>>> bool(trace.converged)
True
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import diffeo, dynamics, spectral
from .exceptions import InputError
from .metrics import normalized_mse


def _demo_array(X):
    arr = check_array(X, ensure_min_samples=3, ensure_min_features=2)
    return np.asarray(arr, dtype=float)


class ChebyshevEmbedding(TransformerMixin, BaseEstimator):
    """Maps a demonstration onto its aligned Chebyshev latent trajectory.

    Parameters
    ----------
    n_copies : int, optional
        Number of demonstration copies in the graph; ``n_features + 1`` by
        default.
    """

    def __init__(self, n_copies=None):
        self.n_copies = n_copies

    def fit(self, X, y=None):
        X = _demo_array(X)
        spec = spectral.GraphSpec(X.shape[0], X.shape[1], self.n_copies)
        self.embedding_ = spectral.build_embedding(spec)
        self.n_features_in_ = X.shape[1]
        self.n_points_ = X.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _demo_array(X)
        return spectral.align_to_demo(self.embedding_, X)


class DiffeomorphicMatcher(TransformerMixin, BaseEstimator):
    """Greedy layered Gaussian deformation taking ``X`` onto ``y``.

    ``transform`` applies the fitted map, ``inverse_transform`` undoes it.
    """

    def __init__(self, mu=0.9, beta=0.5, max_layers=100, mse_stop=diffeo.DEFAULT_MSE_STOP):
        self.mu = mu
        self.beta = beta
        self.max_layers = max_layers
        self.mse_stop = mse_stop

    def fit(self, X, y):
        X = check_array(X)
        Y = check_array(y)
        self.model_ = diffeo.fit(X, Y, self.mu, self.beta, self.max_layers, self.mse_stop)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        return diffeo.forward(self.model_, check_array(X))

    def inverse_transform(self, X):
        check_is_fitted(self)
        return diffeo.inverse(self.model_, check_array(X))

    def jacobian(self, X):
        check_is_fitted(self)
        return diffeo.jacobian(self.model_, check_array(X))

    def score(self, X, y):
        """Negative normalized MSE of the mapped points against ``y``."""
        return -normalized_mse(self.transform(X), check_array(y))


class ChebyshevDS(BaseEstimator):
    """Stable dynamical system learned from a single demonstration.

    ``fit`` builds the latent embedding, aligns it with the demonstration and
    fits the latent-to-demonstration deformation.  ``predict`` returns
    velocities at demonstration-space positions; ``rollout`` integrates the
    system from a starting point.

    Parameters
    ----------
    n_copies : int, optional
    mu, beta, max_layers, mse_stop
        Deformation fit settings, see :func:`chebds.diffeo.fit`.
    rate : float
        Convergence rate of the latent linear system.
    """

    def __init__(self, n_copies=None, mu=0.9, beta=0.5, max_layers=175,
                 mse_stop=diffeo.DEFAULT_MSE_STOP, rate=dynamics.DEFAULT_RATE):
        self.n_copies = n_copies
        self.mu = mu
        self.beta = beta
        self.max_layers = max_layers
        self.mse_stop = mse_stop
        self.rate = rate

    def fit(self, X, y=None, label=""):
        X = _demo_array(X)
        embedder = ChebyshevEmbedding(self.n_copies).fit(X)
        latent = embedder.transform(X)
        model = diffeo.fit(latent, X, self.mu, self.beta, self.max_layers, self.mse_stop)
        emb = embedder.embedding_
        source_meta = {
            "kind": "chebyshev-latent",
            "n_points": int(X.shape[0]),
            "n_dims": int(X.shape[1]),
            "n_copies": int(emb.selection.n_copies),
            "eigenvalues": [float(v) for v in emb.selection.eigenvalues],
            "start": [float(v) for v in latent[0]],
            "attractor": [float(v) for v in latent[-1]],
        }
        target_meta = {
            "label": str(label),
            "n_points": int(X.shape[0]),
            "n_dims": int(X.shape[1]),
            "start": [float(v) for v in X[0]],
            "attractor": [float(v) for v in X[-1]],
        }
        self.model_ = diffeo.DiffeoModel(
            model.layers, model.mu, model.beta, model.n_dims, model.normalized_mse,
            model.history, source_meta, target_meta,
        )
        self.embedding_ = emb
        self.latent_ = latent
        self.latent_ds_ = dynamics.LatentDS(latent[-1], self.rate)
        self.n_features_in_ = X.shape[1]
        return self

    @classmethod
    def from_model(cls, model, rate=dynamics.DEFAULT_RATE):
        """Rebuild a fitted estimator from a saved pipeline model."""
        if "attractor" not in model.source_meta:
            raise InputError("model carries no latent attractor; was it fitted by the pipeline?")
        est = cls(mu=model.mu, beta=model.beta, max_layers=model.n_layers, rate=rate)
        est.model_ = model
        est.latent_ds_ = dynamics.LatentDS(np.asarray(model.source_meta["attractor"]), rate)
        est.n_features_in_ = model.n_dims
        return est

    @property
    def attractor_(self):
        return diffeo.forward(self.model_, self.latent_ds_.attractor)

    def transform(self, Y):
        """Pull demonstration-space points back to latent space."""
        check_is_fitted(self, "model_")
        return diffeo.inverse(self.model_, check_array(Y))

    def inverse_transform(self, X):
        check_is_fitted(self, "model_")
        return diffeo.forward(self.model_, check_array(X))

    def predict(self, Y):
        """Velocities of the learned system at demonstration-space points."""
        latent = self.transform(Y)
        return dynamics.demo_velocity(self.model_, self.latent_ds_, latent)

    def rollout(self, y0, dt=dynamics.DEFAULT_DT, t_max=None, eps=dynamics.DEFAULT_EPS):
        check_is_fitted(self, "model_")
        return dynamics.rollout(self.model_, self.latent_ds_, y0, dt=dt, t_max=t_max, eps=eps)

    def score(self, X, y=None):
        """Negative normalized MSE between the mapped latent points and ``X``."""
        check_is_fitted(self, "latent_")
        return -normalized_mse(diffeo.forward(self.model_, self.latent_), _demo_array(X))
