"""Latent linear dynamics and rollouts of the learned demonstration-space system.

The latent system is the linear contraction ``x' = rate * (x* - x)``.  With
a learned map ``psi`` from latent to demonstration space, the velocity at
``y = psi(x)`` is ``J_psi(x) g(x)``.  Rollouts integrate in latent space
(classical RK4, fixed step) and push every state through ``psi``.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import diffeo
from ._validation import check_vector
from .exceptions import InputError

DEFAULT_RATE = 1.0
DEFAULT_DT = 1e-2
DEFAULT_EPS = 1e-2
_CHUNK = 256


@dataclass(frozen=True)
class LatentDS:
    attractor: np.ndarray
    rate: float = DEFAULT_RATE

    def __post_init__(self):
        x = check_vector(self.attractor, name="attractor").copy()
        x.setflags(write=False)
        object.__setattr__(self, "attractor", x)
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise InputError(f"rate must be positive, got {self.rate!r}")
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def default_t_max(self):
        return 50.0 / self.rate


@dataclass(frozen=True)
class RolloutTrace:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    converged: bool
    final_distance: float
    latent: np.ndarray = None

    @property
    def steps(self):
        return len(self.times) - 1

    def summary(self):
        return {
            "converged": bool(self.converged),
            "final_distance": float(self.final_distance),
            "steps": int(self.steps),
        }

    def save_csv(self, path):
        n = self.positions.shape[1]
        header = ["time"] + [f"y_{d + 1}" for d in range(n)] + [f"v_{d + 1}" for d in range(n)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, y, v in zip(self.times, self.positions, self.velocities):
                writer.writerow([repr(float(t))] + [repr(float(x)) for x in y] + [repr(float(x)) for x in v])

    def save_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def latent_velocity(ds, x):
    """``rate * (attractor - x)``; ``x`` may be a vector or a stack of rows."""
    return ds.rate * (ds.attractor - np.asarray(x, dtype=float))


def demo_velocity(model, ds, x):
    """Demonstration-space velocity at ``forward(model, x)`` for latent ``x``."""
    x = np.asarray(x, dtype=float)
    J = diffeo.jacobian(model, x)
    g = latent_velocity(ds, x)
    if x.ndim == 1:
        return J @ g
    return np.einsum("mij,mj->mi", J, g)


def rk4_step(ds, x, dt):
    k1 = latent_velocity(ds, x)
    k2 = latent_velocity(ds, x + 0.5 * dt * k1)
    k3 = latent_velocity(ds, x + 0.5 * dt * k2)
    k4 = latent_velocity(ds, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rollout(model, ds, y0, dt=DEFAULT_DT, t_max=None, eps=DEFAULT_EPS, tol=diffeo.DEFAULT_TOL):
    """Integrate the learned system from demonstration-space point ``y0``.

    Stops as soon as the position is within ``eps`` of
    ``forward(model, ds.attractor)`` or once ``t_max`` is reached.

    Raises
    ------
    InversionError
        If ``y0`` cannot be pulled back to latent space.
    """
    y0 = check_vector(y0, name="y0", size=model.n_dims)
    if t_max is None:
        t_max = ds.default_t_max
    if not (dt > 0 and t_max > 0 and dt < t_max):
        raise InputError("need 0 < dt < t_max")
    if not eps > 0:
        raise InputError("eps must be positive")
    target = diffeo.forward(model, ds.attractor)
    x = diffeo.inverse(model, y0, tol=tol)
    n_max = int(np.floor(t_max / dt + 1e-9))

    latent = [x]
    positions = [diffeo.forward(model, x)]
    dist = float(np.linalg.norm(positions[0] - target))
    step = 0
    while dist > eps and step < n_max:
        count = min(_CHUNK, n_max - step)
        block = np.empty((count, x.shape[0]))
        for k in range(count):
            x = rk4_step(ds, x, dt)
            block[k] = x
        mapped = diffeo.forward(model, block)
        gaps = np.linalg.norm(mapped - target, axis=1)
        hit = np.flatnonzero(gaps <= eps)
        keep = count if hit.size == 0 else int(hit[0]) + 1
        latent.extend(block[:keep])
        positions.extend(mapped[:keep])
        step += keep
        dist = float(gaps[keep - 1])
        x = block[keep - 1]
    latent = np.asarray(latent)
    positions = np.asarray(positions)
    velocities = demo_velocity(model, ds, latent)
    times = np.arange(len(positions)) * dt
    return RolloutTrace(times, positions, velocities, dist <= eps, dist, latent)


def load_trace_csv(path):
    """Read the positions of a trace CSV (``time, y_k..., v_k...``)."""
    from .demos import load_csv

    return load_csv(path)
