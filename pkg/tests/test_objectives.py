import numpy as np
import pytest

from pushpull.errors import ShapeMismatch, SingularSystem
from pushpull.objectives import (
    HuberAgent,
    ObjectiveEnsemble,
    QuadraticAgent,
    global_optimum,
    huber_zone_conditions,
    make_huber_ensemble,
    make_quadratic_ensemble,
)

H = 1e-6


def fd_gradient(f, x, h=H):
    g = np.empty_like(x)
    for d in range(x.size):
        e = np.zeros_like(x)
        e[d] = h
        g[d] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


def test_quadratic_gradient_zero_at_solution():
    ens = make_quadratic_ensemble(1, 3, 0)
    a = ens.agents[0]
    np.testing.assert_allclose(a.gradient(np.linalg.solve(a.A, a.b)), 0, atol=1e-12)


def test_huber_gradient_zero_at_center():
    a = HuberAgent(np.array([1.0, -2.0]), 0.5, 0.1)
    np.testing.assert_array_equal(a.gradient(a.center), 0)


@pytest.mark.parametrize("family", ["quadratic", "huber"])
def test_gradient_matches_finite_differences(family):
    rng = np.random.default_rng(3)
    ens = make_quadratic_ensemble(5, 4, 1) if family == "quadratic" else make_huber_ensemble(5, 4, 1)
    for _ in range(200):
        a = ens.agents[int(rng.integers(ens.n))]
        x = rng.uniform(-8, 8, size=ens.p)
        assert rel_err(fd_gradient(a.value, x), a.gradient(x)) <= 1e-6


def test_huber_gradient_across_kink():
    rng = np.random.default_rng(4)
    # dyadic values keep center + delta exact
    a = HuberAgent(np.array([0.25, -1.5, 2.0]), 0.75, 0.1)
    for _ in range(200):
        sign = rng.choice([-1, 1], size=3)
        x = a.center + sign * a.huber_delta + rng.uniform(-H, H, size=3)
        assert rel_err(fd_gradient(a.value, x), a.gradient(x)) <= 1e-5
    # boundary belongs to the quadratic branch, which agrees with the linear one there
    x = a.center + a.huber_delta
    np.testing.assert_allclose(a.gradient(x), a.huber_delta * (1 + a.reg_mu), rtol=1e-15)
    np.testing.assert_array_equal(np.diag(a.hessian(x)), 1 + a.reg_mu)


def test_stacked_gradient():
    ens = make_huber_ensemble(4, 2, 0)
    X = np.stack([a.center for a in ens.agents])
    np.testing.assert_array_equal(ens.stacked_gradient(X), 0)
    one = make_quadratic_ensemble(1, 3, 2)
    x = np.array([[0.1, 0.2, 0.3]])
    np.testing.assert_allclose(one.stacked_gradient(x)[0], one.agents[0].gradient(x[0]))
    xbar = np.array([0.4, -0.1])
    G = ens.stacked_gradient(np.tile(xbar, (4, 1)))
    np.testing.assert_allclose(G.sum(axis=0), 4 * np.mean([a.gradient(xbar) for a in ens.agents], axis=0))
    with pytest.raises(ShapeMismatch):
        ens.stacked_gradient(np.zeros((3, 2)))


def test_global_optimum_examples():
    b = np.array([1.0, -2.0])
    same = ObjectiveEnsemble(tuple(QuadraticAgent(np.eye(2), b) for _ in range(3)), 1.0, 1.0)
    np.testing.assert_allclose(global_optimum(same), b)
    pair = ObjectiveEnsemble((QuadraticAgent(np.eye(2), np.zeros(2)),
                              QuadraticAgent(np.eye(2), np.array([2.0, 0.0]))), 1.0, 1.0)
    np.testing.assert_allclose(global_optimum(pair), [1.0, 0.0])


def test_singular_quadratic_rejected():
    A = np.diag([1.0, 0.0])
    ens = ObjectiveEnsemble((QuadraticAgent(A, np.ones(2)),), 1.0, 1.0)
    with pytest.raises(SingularSystem):
        global_optimum(ens)


@pytest.mark.parametrize("seed", range(10))
def test_huber_optimum_zeroes_summed_gradient(seed):
    ens = make_huber_ensemble(12, 3, seed)
    x = global_optimum(ens)
    assert np.linalg.norm(ens.total_gradient(x)) <= 1e-12
    assert huber_zone_conditions(ens, x) == (True, True)


def test_huber_constants_and_degenerate_case():
    ens = make_huber_ensemble(12, 2, 1, 1.0, 0.1)
    assert ens.mu == pytest.approx(0.1) and ens.L == pytest.approx(1.1)
    one = make_huber_ensemble(1, 1, 0)
    np.testing.assert_allclose(global_optimum(one), one.agents[0].center)


@pytest.mark.parametrize("family", ["quadratic", "huber"])
def test_strong_convexity_and_smoothness(family):
    rng = np.random.default_rng(9)
    ens = make_quadratic_ensemble(6, 3, 2, 0.5, 3.0) if family == "quadratic" else make_huber_ensemble(6, 3, 2)
    for _ in range(10_000 // ens.n):
        x, y = rng.uniform(-10, 10, size=(2, ens.p))
        d = x - y
        for a in ens.agents:
            gd = a.gradient(x) - a.gradient(y)
            assert gd @ d >= ens.mu * (d @ d) * (1 - 1e-12)
            assert np.linalg.norm(gd) <= ens.L * np.linalg.norm(d) * (1 + 1e-12)


def test_quadratic_certified_constants_are_tight():
    ens = make_quadratic_ensemble(4, 3, 5, 0.5, 3.0)
    assert ens.mu == pytest.approx(0.5) and ens.L == pytest.approx(3.0)


def test_serialization_roundtrip(tmp_path):
    for ens in (make_huber_ensemble(3, 2, 4), make_quadratic_ensemble(3, 2, 4)):
        path = tmp_path / f"{ens.family}.json"
        ens.save(path)
        back = ObjectiveEnsemble.load(path)
        assert (back.family, back.seed, back.mu, back.L) == (ens.family, ens.seed, ens.mu, ens.L)
        np.testing.assert_array_equal(global_optimum(back), global_optimum(ens))
