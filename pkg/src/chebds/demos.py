"""Demonstration trajectories: analytic generators, resampling and CSV I/O."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_points, check_vector
from .exceptions import InputError

# Upper end of the unstable-spiral time range, kept literally (not pi).
SPIRAL_T_MAX = 3.14
STABLE_STEP = 0.003
STABLE_GAIN = 0.3
STABLE_STOP = 1e-2
ARCHIMEDEAN_RADIUS = 0.1
ARCHIMEDEAN_TURN = 3.0 * np.pi
ARCHIMEDEAN_T_MAX = 12.0


@dataclass(frozen=True)
class Demonstration:
    """A single demonstration; the last point is taken as the attractor.

    Attributes
    ----------
    points : ndarray of shape (N, n)
    velocities : ndarray of shape (N, n) or None
    dt : float or None
        Sampling period, when known.
    label : str
    meta : dict
        Free-form string metadata (units, generator parameters) carried
        through CSV round trips.
    """

    points: np.ndarray
    velocities: np.ndarray = None
    dt: float = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = check_points(self.points, name="points", min_rows=3)
        object.__setattr__(self, "points", pts)
        if self.velocities is not None:
            vel = check_points(self.velocities, name="velocities", n_dims=pts.shape[1])
            if vel.shape != pts.shape:
                raise InputError("velocities must have the same shape as points")
            object.__setattr__(self, "velocities", vel)
        if self.dt is not None and not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"dt must be positive, got {self.dt!r}")

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def n_dims(self):
        return self.points.shape[1]

    @property
    def start(self):
        return self.points[0]

    @property
    def attractor(self):
        return self.points[-1]

    def __eq__(self, other):
        if not isinstance(other, Demonstration):
            return NotImplemented
        same_vel = (self.velocities is None and other.velocities is None) or (
            self.velocities is not None
            and other.velocities is not None
            and np.array_equal(self.velocities, other.velocities)
        )
        return (
            np.array_equal(self.points, other.points)
            and same_vel
            and self.dt == other.dt
            and self.label == other.label
        )

    __hash__ = None


def _with_velocities(points, dt, label, **meta):
    vel = np.gradient(points, dt, axis=0)
    return Demonstration(points, vel, dt, label, {k: str(v) for k, v in meta.items()})


def unstable_spiral(c, n_samples=500):
    """Spherical spiral ``(sin t cos ct, sin t sin ct, cos t)``, ``t`` in ``[0, 3.14]``."""
    if n_samples < 3:
        raise InputError("n_samples must be >= 3")
    if not c > 0:
        raise InputError("c must be positive")
    t = np.linspace(0.0, SPIRAL_T_MAX, int(n_samples))
    pts = np.column_stack([np.sin(t) * np.cos(c * t), np.sin(t) * np.sin(c * t), np.cos(t)])
    return _with_velocities(pts, t[1] - t[0], f"unstable-spiral-c{c:g}", kind="unstable-spiral", c=c)


def _sphere(theta, psi):
    return np.array([np.sin(theta) * np.cos(psi), np.sin(theta) * np.sin(psi), np.cos(theta)])


def stable_spiral(c, theta0=0.1, psi0=0.0, stop=STABLE_STOP, max_steps=200_000):
    """Spiral traced by Euler-integrating a stable system in spherical angles.

    Both angles relax linearly (gain 0.3, step 0.003) towards ``theta = pi``
    and ``psi = 2 c pi``.  Generation stops at the first step whose
    displacement drops back below ``stop`` after having reached it.  For
    small ``c`` the step never reaches ``stop``; the trajectory then runs
    until it is within ``stop`` of its limit point, the south pole.
    """
    if not c > 0:
        raise InputError("c must be positive")
    theta, psi = float(theta0), float(psi0)
    goal_psi = 2.0 * c * np.pi
    south = np.array([0.0, 0.0, -1.0])
    pts = [_sphere(theta, psi)]
    reached = False
    for _ in range(max_steps):
        theta_dot = STABLE_GAIN * (np.pi - theta)
        psi_dot = STABLE_GAIN * (goal_psi - psi)
        theta += STABLE_STEP * theta_dot
        psi += STABLE_STEP * psi_dot
        p = _sphere(theta, psi)
        step = np.linalg.norm(p - pts[-1])
        pts.append(p)
        if step >= stop:
            reached = True
        elif reached:
            break
        elif np.linalg.norm(p - south) < stop:
            break
    pts = np.asarray(pts)
    return _with_velocities(
        pts, STABLE_STEP, f"stable-spiral-c{c:g}", kind="stable-spiral", c=c, theta0=theta0, psi0=psi0
    )


def archimedean_spiral(n_samples=500, radius=ARCHIMEDEAN_RADIUS):
    """Planar spiral whose radius grows linearly to ``radius`` over three half-turns."""
    if n_samples < 3:
        raise InputError("n_samples must be >= 3")
    t = np.linspace(0.0, ARCHIMEDEAN_T_MAX, int(n_samples))
    theta = ARCHIMEDEAN_TURN / ARCHIMEDEAN_T_MAX * t
    r = radius * theta / ARCHIMEDEAN_TURN
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return _with_velocities(pts, t[1] - t[0], "archimedean", kind="archimedean", radius=radius)


def resample_uniform(points, n_out):
    """Linearly resample a trajectory at ``n_out`` uniformly spaced sample times.

    Input samples are assumed equally spaced in time; the first and last
    points are reproduced exactly.
    """
    pts = check_points(points, name="points", min_rows=2)
    n_out = int(n_out)
    if n_out < 2:
        raise InputError("n_out must be >= 2")
    src = np.linspace(0.0, 1.0, len(pts))
    dst = np.linspace(0.0, 1.0, n_out)
    out = np.column_stack([np.interp(dst, src, pts[:, d]) for d in range(pts.shape[1])])
    out[0], out[-1] = pts[0], pts[-1]
    return out


def resample_demo(demo, n_out):
    pts = resample_uniform(demo.points, n_out)
    dt = None
    if demo.dt is not None:
        dt = demo.dt * (demo.n_points - 1) / (n_out - 1)
    vel = np.gradient(pts, dt, axis=0) if dt else None
    return Demonstration(pts, vel, dt, demo.label, dict(demo.meta))


def perturb_starts(y0, radius, count, seed=0):
    """``count`` points drawn uniformly from the ball of ``radius`` around ``y0``."""
    y0 = check_vector(y0, name="y0")
    if not radius > 0:
        raise InputError("radius must be positive")
    if count < 1:
        raise InputError("count must be >= 1")
    rng = np.random.default_rng(seed)
    n = y0.shape[0]
    direction = rng.standard_normal((count, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = radius * rng.random(count) ** (1.0 / n)
    return [y0 + s * d for s, d in zip(scale, direction)]


# --- CSV -------------------------------------------------------------------


def save_csv(demo, path):
    """Write ``demo`` as CSV: a ``#`` metadata line, a header, one row per sample."""
    n = demo.n_dims
    header = [f"y_{d + 1}" for d in range(n)]
    cols = [demo.points]
    if demo.velocities is not None:
        header += [f"v_{d + 1}" for d in range(n)]
        cols.append(demo.velocities)
    if demo.dt is not None:
        header = ["time"] + header
        cols = [(np.arange(demo.n_points) * demo.dt)[:, None]] + cols
    data = np.hstack(cols)
    meta = {"label": demo.label}
    if demo.dt is not None:
        meta["dt"] = repr(float(demo.dt))
    meta.update(demo.meta)
    with open(path, "w", newline="") as fh:
        fh.write("# " + ";".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])


def _parse_meta(line):
    meta = {}
    for item in line.lstrip("#").strip().split(";"):
        if "=" in item:
            key, value = item.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def load_csv(path):
    """Read a demonstration CSV written by :func:`save_csv` or a bare numeric table.

    Columns are recognised by header name (``y_k``, ``v_k``, ``time``); a
    file without a header is read as positions only.  Errors name the
    offending line.
    """
    meta = {}
    header = None
    rows = []
    width = None
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read demonstration {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if raw[0].lstrip().startswith("#"):
                meta.update(_parse_meta(",".join(raw)))
                continue
            cells = [c.strip() for c in raw]
            if header is None and not rows and not _is_number(cells[0]):
                header = cells
                width = len(header)
                continue
            if width is None:
                width = len(cells)
            if len(cells) != width:
                raise InputError(f"{path}:{lineno}: expected {width} columns, got {len(cells)}")
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: malformed number ({exc})") from exc
            if not all(math.isfinite(v) for v in values):
                raise InputError(f"{path}:{lineno}: non-finite value in row")
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.asarray(rows)
    if header is None:
        header = [f"y_{d + 1}" for d in range(data.shape[1])]
    pos = _indexed_columns(header, "y_", path)
    vel = _indexed_columns(header, "v_", path)
    if not pos:
        raise InputError(f"{path}: header has no y_k columns")
    if vel and len(vel) != len(pos):
        raise InputError(f"{path}: {len(vel)} velocity columns for {len(pos)} positions")
    points = data[:, pos]
    velocities = data[:, vel] if vel else None
    dt = None
    if "dt" in meta:
        dt = float(meta["dt"])
    elif "time" in header and len(data) > 1:
        steps = np.diff(data[:, header.index("time")])
        if np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) and steps[0] > 0:
            dt = float(steps[0])
    label = meta.pop("label", "")
    meta.pop("dt", None)
    if len(points) < 3:
        raise InputError(f"{path}: a demonstration needs at least 3 rows")
    return Demonstration(points, velocities, dt, label, meta)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _indexed_columns(header, prefix, path):
    found = {}
    for pos, name in enumerate(header):
        if name.startswith(prefix):
            try:
                found[int(name[len(prefix):])] = pos
            except ValueError as exc:
                raise InputError(f"{path}: bad column name {name!r}") from exc
    keys = sorted(found)
    if keys and keys != list(range(1, len(keys) + 1)):
        raise InputError(f"{path}: {prefix}k columns must be numbered 1..n")
    return [found[k] for k in keys]
