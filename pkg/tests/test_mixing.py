import numpy as np
import pytest

from pushpull.errors import DimensionMismatch, EigenvectorNotUnique
from pushpull.graph import DirectedGraph, random_strongly_connected, reverse, root_set, star
from pushpull.mixing import (
    MixingPair,
    check_assumptions,
    column_stochastic_from_graph,
    graph_of,
    left_perron_u,
    read_matrix_csv,
    residual_spectral_radius,
    right_perron_v,
    row_stochastic_from_graph,
    write_matrix_csv,
)

from conftest import random_digraph, rooted_graph

STAR_R = np.array([[1, 0, 0, 0], [0.5, 0.5, 0, 0], [0.5, 0, 0.5, 0], [0.5, 0, 0, 0.5]])
STAR_C = np.array([[1, 0.5, 0.5, 0.5], [0, 0.5, 0, 0], [0, 0, 0.5, 0], [0, 0, 0, 0.5]])


def eig_fixed_vector(M):
    """Eigenvector of M for the eigenvalue closest to 1, scaled to sum n (oracle via np.linalg.eig)."""
    w, V = np.linalg.eig(M)
    x = np.real(V[:, np.argmin(np.abs(w - 1))])
    return x * (M.shape[0] / x.sum())


def test_builders_on_empty_graph():
    g = DirectedGraph(3)
    np.testing.assert_array_equal(row_stochastic_from_graph(g), np.eye(3))
    np.testing.assert_array_equal(column_stochastic_from_graph(g), np.eye(3))


def test_builders_reproduce_star_display():
    g_R, g_C = star()
    np.testing.assert_array_equal(row_stochastic_from_graph(g_R), STAR_R)
    np.testing.assert_array_equal(column_stochastic_from_graph(g_C), STAR_C)


@pytest.mark.parametrize("seed", range(10))
def test_builders_are_stochastic_and_induce_graph(seed):
    rng = np.random.default_rng(seed)
    g = random_digraph(rng, int(rng.integers(2, 15)), 0.3)
    R = row_stochastic_from_graph(g)
    C = column_stochastic_from_graph(g)
    assert np.max(np.abs(R.sum(axis=1) - 1)) <= 1e-15
    assert np.max(np.abs(C.sum(axis=0) - 1)) <= 1e-15
    assert np.all(np.diag(R) > 0) and np.all(np.diag(C) > 0)
    assert graph_of(R) == g
    assert graph_of(C) == g


def test_perron_examples():
    W = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
    np.testing.assert_allclose(left_perron_u(W), np.ones(3), atol=1e-12)
    np.testing.assert_allclose(right_perron_v(W), np.ones(3), atol=1e-12)
    oracle_u = eig_fixed_vector(STAR_R.T)
    oracle_v = eig_fixed_vector(STAR_C)
    np.testing.assert_allclose(oracle_u, [4, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(oracle_v, [4, 0, 0, 0], atol=1e-12)
    np.testing.assert_array_equal(left_perron_u(STAR_R), [4, 0, 0, 0])
    np.testing.assert_array_equal(right_perron_v(STAR_C), [4, 0, 0, 0])
    np.testing.assert_array_equal(left_perron_u(np.ones((1, 1))), [1.0])
    np.testing.assert_array_equal(right_perron_v(np.ones((1, 1))), [1.0])


def test_perron_rejects_repeated_eigenvalue():
    with pytest.raises(EigenvectorNotUnique):
        left_perron_u(np.eye(3))
    with pytest.raises(EigenvectorNotUnique):
        right_perron_v(np.eye(2))
    with pytest.raises(EigenvectorNotUnique):
        left_perron_u(np.eye(70))


def test_perron_support_equals_root_set():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        k = int(rng.integers(1, n + 1))
        roots = set(rng.choice(n, size=k, replace=False).tolist())
        g = rooted_graph(rng, n, roots)
        assert root_set(g) == roots
        R = row_stochastic_from_graph(g)
        u = left_perron_u(R)
        assert set(np.flatnonzero(u > 0).tolist()) == roots
        np.testing.assert_allclose(u @ R, u, atol=1e-10)
        assert abs(u.sum() - n) < 1e-10
        C = column_stochastic_from_graph(reverse(g))
        v = right_perron_v(C)
        assert set(np.flatnonzero(v > 0).tolist()) == root_set(reverse(graph_of(C)))


def test_power_iteration_branch_matches_eig():
    g = random_strongly_connected(70, 200, 5)
    R = row_stochastic_from_graph(g)
    C = column_stochastic_from_graph(g)
    np.testing.assert_allclose(left_perron_u(R), eig_fixed_vector(R.T), atol=1e-9)
    np.testing.assert_allclose(right_perron_v(C), eig_fixed_vector(C), atol=1e-9)


def test_check_assumptions_star(star_pair):
    report = check_assumptions(star_pair.R, star_pair.C)
    assert report.passed
    assert report.uv == pytest.approx(16.0, abs=1e-12)
    assert report.roots_R == {0} and report.roots_CT == {0}


def test_check_assumptions_disjoint_roots():
    R = row_stochastic_from_graph(DirectedGraph(2, frozenset({(0, 1)})))
    C = column_stochastic_from_graph(DirectedGraph(2, frozenset({(0, 1)})))
    report = check_assumptions(R, C)
    assert report.spanning_tree_R and report.spanning_tree_CT
    assert report.roots_R == {0} and report.roots_CT == {1}
    assert not report.roots_intersect
    assert report.uv <= 1e-8
    assert report.cross_check and not report.passed


def test_check_assumptions_identity_and_shape():
    report = check_assumptions(np.eye(3), np.eye(3))
    assert not report.spanning_tree_R and not report.spanning_tree_CT
    assert not report.passed
    with pytest.raises(DimensionMismatch):
        check_assumptions(np.eye(2), np.eye(3))


def test_check_assumptions_flags_non_stochastic():
    R = STAR_R.copy()
    R[1, 1] = 0.6
    report = check_assumptions(R, STAR_C)
    assert not report.row_stochastic and not report.passed


def test_residual_spectral_radius_examples():
    assert residual_spectral_radius(np.ones((1, 1)), np.ones((1, 1))) == 0.0
    u = np.array([4.0, 0, 0, 0])
    assert residual_spectral_radius(STAR_R, np.outer(np.ones(4), u) / 4) == pytest.approx(0.5, abs=1e-12)
    # symmetric doubly stochastic ring: residual radius is the second largest |eigenvalue|
    n = 6
    W = np.zeros((n, n))
    for i in range(n):
        W[i, i] = 0.5
        W[i, (i + 1) % n] = W[i, (i - 1) % n] = 0.25
    lam = np.sort(np.abs(np.linalg.eigvalsh(W)))[::-1]
    assert residual_spectral_radius(W, np.ones((n, n)) / n) == pytest.approx(lam[1], abs=1e-12)
    with pytest.raises(DimensionMismatch):
        residual_spectral_radius(W, np.ones((2, 2)))


def test_mixing_pair_invariants():
    g = random_strongly_connected(12, 24, 7)
    mp = MixingPair.from_graphs(g, g)
    ones = np.ones(12)
    np.testing.assert_allclose(mp.u @ mp.R, mp.u, atol=1e-10)
    np.testing.assert_allclose(mp.C @ mp.v, mp.v, atol=1e-10)
    assert mp.u.sum() == pytest.approx(12) and mp.v.sum() == pytest.approx(12)
    assert mp.rho_R < 1 and mp.rho_C < 1
    np.testing.assert_allclose(mp.B_R @ ones, 0, atol=1e-12)
    with pytest.raises(ValueError):
        mp.R[0, 0] = 2.0


def test_matrix_csv_roundtrip(tmp_path):
    path = tmp_path / "R.csv"
    write_matrix_csv(STAR_R, path)
    np.testing.assert_array_equal(read_matrix_csv(path, "row"), STAR_R)
    loose = tmp_path / "loose.csv"
    loose.write_text("0.5000000001,0.5\n0.5,0.5\n")
    read_matrix_csv(loose, "row")
    off = tmp_path / "off.csv"
    off.write_text("0.6,0.5\n0.5,0.5\n")
    with pytest.raises(ValueError):
        read_matrix_csv(off, "row")
    with pytest.raises(ValueError):
        read_matrix_csv(path, "column")
    bad = tmp_path / "bad.csv"
    bad.write_text("1,x\n0,1\n")
    with pytest.raises(ValueError):
        read_matrix_csv(bad)
