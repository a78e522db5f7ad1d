"""Stable dynamical systems learned from one demonstration via a Chebyshev latent space."""

from .demos import (
    Demonstration,
    archimedean_spiral,
    load_csv,
    perturb_starts,
    resample_uniform,
    save_csv,
    stable_spiral,
    unstable_spiral,
)
from .diffeo import DiffeoLayer, DiffeoModel, fit, forward, inverse, jacobian
from .dynamics import LatentDS, RolloutTrace, demo_velocity, latent_velocity, rollout
from .estimators import ChebyshevDS, ChebyshevEmbedding, DiffeomorphicMatcher
from .exceptions import (
    ChebDSError,
    EigenvalueShortfallError,
    InputError,
    InversionError,
    NumericalError,
)
from .metrics import DtwScore, dtw, fast_dtw, normalized_mse
from .spectral import (
    GraphSpec,
    LatentEmbedding,
    SpectralSelection,
    align_to_demo,
    build_embedding,
    chebyshev_coordinate,
    dense_laplacian,
    repeating_eigenvalues,
)
from .tuning import GridCell, TuningReport, grid_search, select

__version__ = "0.1.0"
