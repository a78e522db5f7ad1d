import numpy as np
import pytest

from chebds import diffeo, dynamics
from chebds.diffeo import DiffeoLayer, DiffeoModel
from chebds.dynamics import LatentDS
from chebds.exceptions import InputError


def small_model():
    layers = (
        DiffeoLayer([0.5, 0.2], [0.2, 0.1], 0.4),
        DiffeoLayer([0.1, 0.6], [-0.1, 0.15], 0.3),
    )
    return DiffeoModel(layers, 0.9, 0.5, 2)


def test_latent_velocity_examples():
    ds = LatentDS(np.zeros(3), 1.0)
    np.testing.assert_array_equal(dynamics.latent_velocity(ds, [1.0, 0, 0]), [-1.0, 0, 0])
    np.testing.assert_array_equal(dynamics.latent_velocity(ds, np.zeros(3)), np.zeros(3))
    x = np.random.default_rng(0).normal(size=(50, 3))
    v = dynamics.latent_velocity(ds, x)
    assert np.all(np.einsum("ij,ij->i", v, -x) > 0)


def test_latent_ds_validation():
    with pytest.raises(InputError):
        LatentDS(np.zeros(2), 0.0)
    assert LatentDS(np.zeros(2), 2.0).default_t_max == 25.0


def test_demo_velocity_identity_and_attractor():
    ds = LatentDS(np.array([0.3, 0.1]), 1.0)
    empty = DiffeoModel((), 0.9, 0.5, 2)
    x = np.array([1.0, -1.0])
    np.testing.assert_array_equal(dynamics.demo_velocity(empty, ds, x), dynamics.latent_velocity(ds, x))
    np.testing.assert_array_equal(dynamics.demo_velocity(small_model(), ds, ds.attractor), [0.0, 0.0])


def test_demo_velocity_matches_chain_rule_fd():
    m = small_model()
    ds = LatentDS(np.array([0.0, 0.0]), 1.5)
    x = np.array([0.4, 0.5])
    h = 1e-6
    g = dynamics.latent_velocity(ds, x)
    fd = (diffeo.forward(m, x + h * g) - diffeo.forward(m, x - h * g)) / (2 * h)
    np.testing.assert_allclose(dynamics.demo_velocity(m, ds, x), fd, rtol=1e-6)


def test_rollout_from_attractor_is_trivial():
    m = small_model()
    ds = LatentDS(np.array([0.2, 0.3]), 1.0)
    trace = dynamics.rollout(m, ds, diffeo.forward(m, ds.attractor))
    assert trace.converged and trace.steps == 0 and trace.final_distance <= 1e-9


def test_rollout_converges_and_latent_is_exponential():
    m = small_model()
    ds = LatentDS(np.array([0.2, 0.3]), 1.0)
    y0 = np.array([1.0, 1.0])
    trace = dynamics.rollout(m, ds, y0, dt=1e-3, eps=1e-4)
    assert trace.converged and trace.final_distance <= 1e-4
    dist = np.linalg.norm(trace.latent - ds.attractor, axis=1)
    expected = np.exp(-trace.times) * dist[0]
    np.testing.assert_allclose(dist, expected, rtol=1e-6)
    assert np.all(np.diff(trace.times) > 0)


def test_trace_velocities_match_positions():
    m = small_model()
    ds = LatentDS(np.array([0.2, 0.3]), 1.0)
    dt = 1e-3
    trace = dynamics.rollout(m, ds, np.array([1.0, 1.0]), dt=dt, eps=1e-3)
    fd = (trace.positions[2:] - trace.positions[:-2]) / (2 * dt)
    assert np.abs(fd - trace.velocities[1:-1]).max() < 1e-4


def test_rollout_stops_at_t_max():
    m = small_model()
    ds = LatentDS(np.array([0.2, 0.3]), 1.0)
    trace = dynamics.rollout(m, ds, np.array([1.0, 1.0]), dt=0.1, t_max=0.5)
    assert not trace.converged and trace.steps == 5
    with pytest.raises(InputError):
        dynamics.rollout(m, ds, np.array([1.0, 1.0]), dt=1.0, t_max=0.5)


def test_trace_export(tmp_path):
    m = small_model()
    ds = LatentDS(np.array([0.2, 0.3]), 1.0)
    trace = dynamics.rollout(m, ds, np.array([1.0, 1.0]))
    trace.save_csv(tmp_path / "t.csv")
    trace.save_summary(tmp_path / "s.json")
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "time,y_1,y_2,v_1,v_2"
    back = dynamics.load_trace_csv(tmp_path / "t.csv")
    assert back.points.tobytes() == trace.positions.tobytes()
    import json
    assert json.loads((tmp_path / "s.json").read_text()) == trace.summary()


def test_fitted_spiral_velocity_follows_demo(spiral_c1):
    demo, est = spiral_c1
    v = dynamics.demo_velocity(est.model_, est.latent_ds_, est.latent_[:-1])
    ref = demo.velocities[:-1]
    cos = np.einsum("ij,ij->i", v, ref) / (np.linalg.norm(v, axis=1) * np.linalg.norm(ref, axis=1))
    assert np.median(cos) >= 0.9


def test_fitted_spiral_rollout_from_demo_start(spiral_c7):
    demo, est = spiral_c7
    trace = est.rollout(demo.points[0])
    assert trace.converged
    assert trace.times[-1] < est.latent_ds_.default_t_max
