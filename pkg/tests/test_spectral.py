import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chebds import spectral
from chebds.exceptions import EigenvalueShortfallError, InputError
from chebds.spectral import GraphSpec

from conftest import recursion_column


def dense_repeated(spec, tol=1e-9):
    """Distinct eigenvalues of the dense Laplacian that appear at least twice and sit under the bound."""
    vals = np.linalg.eigvalsh(spectral.dense_laplacian(spec))
    out = []
    i = 0
    while i < len(vals):
        j = i
        while j + 1 < len(vals) and vals[j + 1] - vals[i] < tol:
            j += 1
        if j > i and 1e-12 < vals[i] < spec.bound:
            out.append(float(np.mean(vals[i:j + 1])))
        i = j + 1
    return out


def test_graph_spec_defaults_and_validation():
    assert GraphSpec(10, 3).n_copies == 4
    for bad in [(2, 2), (10, 1), (10, 2, 2)]:
        with pytest.raises(InputError):
            GraphSpec(*bad)


def test_small_graph_matches_dense_oracle():
    spec = GraphSpec(3, 2, 3)
    sel = spectral.repeating_eigenvalues(spec)
    oracle = dense_repeated(spec)
    assert len(oracle) == 1 == spectral.repeated_count(3)
    np.testing.assert_allclose(sel.distinct, oracle, atol=1e-10)


@pytest.mark.parametrize("k, expected", [(3, 1), (4, 1), (5, 2), (6, 2), (8, 3)])
def test_repeated_count(k, expected):
    assert spectral.repeated_count(k) == expected


def test_bound_value():
    assert spectral.eigenvalue_bound(500) == pytest.approx(2 * (1 - np.cos(np.pi / 500)), rel=1e-12)
    sel = spectral.repeating_eigenvalues(GraphSpec(500, 3, 4))
    assert all(lam < 3.9478e-5 for lam in sel.eigenvalues)


def test_dense_laplacian_structure():
    L = spectral.dense_laplacian(GraphSpec(3, 2, 3))
    assert np.array_equal(L, L.T)
    adj = -(L - np.diag(np.diag(L)))
    np.testing.assert_array_equal(np.diag(L), adj.sum(axis=1))
    vals = np.linalg.eigvalsh(L)
    for lam in spectral.repeating_eigenvalues(GraphSpec(3, 2, 3)).distinct:
        assert np.sum(np.abs(vals - lam) < 1e-9) == 2


def test_dense_size_guard():
    with pytest.raises(InputError):
        spectral.dense_laplacian(GraphSpec(500, 4, 5))


def test_block_eigenvector_form():
    # A complex eigenvector of a repeated eigenvalue is (u, rho u, rho^2 u, ...).
    N, K = 4, 5
    spec = GraphSpec(N, 2, K)
    L = spectral.dense_laplacian(spec)
    for j in spectral.paired_branches(K):
        lam = spectral.branch_minimum(N, K, j)
        vals, vecs = np.linalg.eigh(L)
        basis = vecs[:, np.abs(vals - lam) < 1e-9]
        assert basis.shape[1] == 2
        rho = np.exp(2j * np.pi * j / K)
        # Project the block-form ansatz onto the eigenspace and check it is reproduced.
        diag, off = spectral.branch_tridiagonal(N, K, j)
        H = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        w, U = np.linalg.eigh(H)
        u = U[:, np.argmin(np.abs(w - lam))]
        full = np.concatenate([rho**k * u for k in range(K)])
        proj = basis @ (basis.T @ full)
        np.testing.assert_allclose(proj, full, atol=1e-8)
        np.testing.assert_allclose(L @ full, lam * full, atol=1e-8)


def test_shortfall_raises_with_explicit_copies():
    # Odd n with even K: pairs give one fewer value, the unpaired branch fills it
    sel = spectral.repeating_eigenvalues(GraphSpec(50, 3, 4))
    assert len(sel.eigenvalues) == 3
    with pytest.raises(EigenvalueShortfallError) as info:
        spectral.repeating_eigenvalues(GraphSpec(50, 5, 3))
    assert info.value.needed == 5


def test_build_embedding_retries_only_default_copies():
    emb = spectral.build_embedding(GraphSpec(50, 5))
    assert emb.selection.n_copies >= 6
    with pytest.raises(EigenvalueShortfallError):
        spectral.build_embedding(GraphSpec(50, 5, 3))


@pytest.mark.parametrize("lam", [1e-6, 1e-3, 0.3, 1.7, 3.5])
def test_first_coordinate_is_one_minus_lambda(lam):
    assert spectral.chebyshev_coordinate(1, lam) == 1 - lam


def test_small_lambda_limit():
    for i in (1, 5, 40):
        assert spectral.chebyshev_coordinate(i, 1e-14) == pytest.approx(1.0, abs=1e-10)


def test_closed_form_vs_recursion_n50():
    sel = spectral.repeating_eigenvalues(GraphSpec(50, 2, 3))
    for lam in sel.distinct:
        closed = np.array([spectral.chebyshev_coordinate(i, lam) for i in range(1, 51)])
        np.testing.assert_allclose(closed, recursion_column(50, lam), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-8, 3.9), st.integers(1, 200))
def test_closed_form_matches_recursion_anywhere(lam, i):
    assert spectral.chebyshev_coordinate(i, lam) == pytest.approx(recursion_column(i, lam)[-1], abs=1e-8 * i)


def test_embedding_rows():
    emb = spectral.build_embedding(GraphSpec(60, 3))
    lam = np.asarray(emb.eigenvalues)
    np.testing.assert_array_equal(emb.points[-1], 1 - lam)
    np.testing.assert_allclose(emb.points[0], np.sqrt(emb.b**2 + 1) * np.sin(emb.gamma - 60 * emb.a), atol=1e-9)
    np.testing.assert_array_equal(emb.start, emb.points[0])
    np.testing.assert_array_equal(emb.attractor, emb.points[-1])


def test_embedding_is_immutable_and_deterministic():
    a = spectral.build_embedding(GraphSpec(80, 3))
    b = spectral.build_embedding(GraphSpec(80, 3))
    assert a.points.tobytes() == b.points.tobytes()
    with pytest.raises(ValueError):
        a.points[0, 0] = 1.0


def test_align_endpoints_and_identity():
    emb = spectral.build_embedding(GraphSpec(40, 3))
    demo = np.linspace([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], 40)
    out = spectral.align_to_demo(emb, demo)
    np.testing.assert_array_equal(out[0], [0, 0, 1])
    np.testing.assert_array_equal(out[-1], [0, 0, 0])
    np.testing.assert_allclose(spectral.align_to_demo(emb, emb.points), emb.points, atol=1e-15)


def test_align_archimedean_extrema():
    from chebds import archimedean_spiral

    demo = archimedean_spiral(200)
    emb = spectral.build_embedding(GraphSpec(200, 2))
    out = spectral.align_to_demo(emb, demo)
    for d in range(2):
        lo, hi = sorted([demo.points[0, d], demo.points[-1, d]])
        assert out[:, d].min() == pytest.approx(lo, abs=1e-12)
        assert out[:, d].max() == pytest.approx(hi, abs=1e-12)


def test_align_shape_mismatch():
    emb = spectral.build_embedding(GraphSpec(40, 3))
    with pytest.raises(InputError):
        spectral.align_to_demo(emb, np.zeros((41, 3)))


def test_write_matrix_csv(tmp_path):
    L = spectral.dense_laplacian(GraphSpec(3, 2, 3))
    path = tmp_path / "L.csv"
    spectral.write_matrix_csv(L, path)
    back = np.loadtxt(path, delimiter=",")
    np.testing.assert_array_equal(back, L)
