import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from chebds import ChebyshevDS, ChebyshevEmbedding, DiffeomorphicMatcher, archimedean_spiral, diffeo
from chebds.exceptions import EigenvalueShortfallError


def test_params_and_clone():
    est = ChebyshevDS(mu=0.6, beta=0.9, max_layers=50)
    params = est.get_params()
    assert params["mu"] == 0.6 and params["max_layers"] == 50
    assert clone(est).get_params() == params


def test_not_fitted():
    with pytest.raises(NotFittedError):
        ChebyshevDS().predict(np.zeros((3, 3)))


def test_embedding_transformer():
    demo = archimedean_spiral(100)
    aligned = ChebyshevEmbedding().fit_transform(demo.points)
    # The second dimension has no net displacement, so it is held at the start value.
    np.testing.assert_array_equal(aligned[0], demo.points[0])
    np.testing.assert_allclose(aligned[-1], demo.points[-1], atol=1e-12)
    assert np.all(aligned[:, 1] == demo.points[0, 1])


def test_matcher_round_trip():
    t = np.linspace(0, 1, 80)
    X = np.c_[t, t]
    y = np.c_[t, t + 0.1 * np.sin(3 * t)]
    m = DiffeomorphicMatcher(max_layers=20).fit(X, y)
    assert m.score(X, y) > -1e-3
    np.testing.assert_allclose(m.inverse_transform(m.transform(X)), X, atol=1e-8)
    assert m.jacobian(X).shape == (80, 2, 2)


def test_identity_demo_needs_no_layers():
    emb = ChebyshevEmbedding().fit(np.zeros((60, 3)) + np.arange(60)[:, None] * [1.0, 2.0, 3.0])
    est = ChebyshevDS().fit(emb.embedding_.points)
    assert est.model_.n_layers == 0


def test_fit_predict(spiral_c1):
    demo, est = spiral_c1
    assert est.model_.n_layers <= 50
    assert -est.score(demo.points) <= 1e-4
    np.testing.assert_allclose(est.attractor_, demo.points[-1], atol=5e-2)
    v = est.predict(demo.points[:5])
    assert v.shape == (5, 3)
    assert est.model_.target_meta["label"] == demo.label


def test_from_saved_model(spiral_c1, tmp_path):
    demo, est = spiral_c1
    est.model_.save(tmp_path / "m.json")
    back = ChebyshevDS.from_model(diffeo.DiffeoModel.load(tmp_path / "m.json"))
    a = est.rollout(demo.points[0])
    b = back.rollout(demo.points[0])
    assert a.positions.tobytes() == b.positions.tobytes()


def test_seven_dim_curve():
    t = np.linspace(0, 1, 200)[:, None]
    X = np.hstack([np.sin((k + 1) * t) + 0.1 * k * t for k in range(7)])
    est = ChebyshevDS(max_layers=30).fit(X)
    assert est.embedding_.selection.n_copies == 8


def test_shortfall_with_explicit_copies():
    X = np.cumsum(np.ones((50, 5)), axis=0)
    with pytest.raises(EigenvalueShortfallError):
        ChebyshevDS(n_copies=3).fit(X)
