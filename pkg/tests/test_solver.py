import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushpull.errors import AssumptionViolation, ShapeMismatch, StepSizeOutOfRange
from pushpull.graph import GraphSequence, random_strongly_connected
from pushpull.mixing import MixingPair
from pushpull.objectives import (
    HuberAgent,
    ObjectiveEnsemble,
    global_optimum,
    make_huber_ensemble,
    make_quadratic_ensemble,
)
from pushpull.solver import (
    CSV_HEADER,
    SolverConfig,
    centralized_gd,
    fit_rate,
    init,
    lemma2_holds,
    run,
    step_push_pull,
    step_push_pull_half,
)

from conftest import strongly_connected_pair

ONE = MixingPair.from_matrices(np.ones((1, 1)), np.ones((1, 1)))


def test_init_sets_tracker_to_gradient():
    ens = make_huber_ensemble(4, 2, 0)
    X0 = np.random.default_rng(0).standard_normal((4, 2))
    s = init(ens, X0)
    np.testing.assert_array_equal(s.Y, ens.stacked_gradient(X0))
    assert s.k == 0
    with pytest.raises(ShapeMismatch):
        init(ens, np.zeros((3, 2)))


def test_single_agent_reduces_to_gradient_descent():
    ens = make_quadratic_ensemble(1, 3, 4)
    x0 = np.array([1.0, -2.0, 0.5])
    alpha = 0.3
    s = init(ens, x0[None, :])
    x = x0.copy()
    for _ in range(50):
        s = step_push_pull(s, ens, ONE.R, ONE.C, alpha)
        x = x - alpha * ens.agents[0].gradient(x)
        np.testing.assert_allclose(s.X[0], x, rtol=0, atol=1e-14)


def test_optimum_is_fixed_point():
    agents = tuple(HuberAgent(np.array([0.5, -1.0]), 1.0, 0.1) for _ in range(4))
    ens = ObjectiveEnsemble(agents, 0.1, 1.1)
    x_star = global_optimum(ens)
    mp = MixingPair.from_graphs(random_strongly_connected(4, 6, 0), random_strongly_connected(4, 6, 0))
    s = init(ens, np.tile(x_star, (4, 1)))
    np.testing.assert_array_equal(s.Y, 0)
    for step in (step_push_pull, step_push_pull_half):
        t = step(s, ens, mp.R, mp.C, 0.5)
        np.testing.assert_allclose(t.X, s.X, atol=1e-15)
        np.testing.assert_allclose(t.Y, 0, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([step_push_pull, step_push_pull_half]))
def test_tracking_identity(seed, step):
    mp = strongly_connected_pair(seed)
    rng = np.random.default_rng(seed)
    ens = make_huber_ensemble(mp.n, 2, seed)
    s = init(ens, rng.standard_normal((mp.n, 2)))
    for _ in range(25):
        s = step(s, ens, mp.R, mp.C, 0.1)
        gsum = s.grad.sum(axis=0)
        assert np.linalg.norm(s.Y.sum(axis=0) - gsum) <= 1e-10 * max(1.0, np.linalg.norm(gsum))


def test_run_converges_and_records():
    mp = MixingPair.from_graphs(random_strongly_connected(6, 12, 1), random_strongly_connected(6, 12, 1))
    ens = make_huber_ensemble(6, 2, 3)
    trace = run(SolverConfig(0.2, mp, max_iters=5000, stop_tolerance=1e-10), ens)
    assert not trace.diverged
    assert trace.residual[0] == pytest.approx(1.0)
    assert trace.residual[-1] <= 1e-10
    assert trace.composite().shape == (len(trace), 3)
    assert trace.iterations_to(1e-6) <= trace.iterations
    assert fit_rate(trace.residual) < 1


def test_divergence_is_flagged_not_raised():
    mp = MixingPair.from_graphs(random_strongly_connected(5, 8, 2), random_strongly_connected(5, 8, 2))
    ens = make_quadratic_ensemble(5, 2, 1)
    X0 = np.random.default_rng(1).standard_normal((5, 2))
    trace = run(SolverConfig(20 / ens.mu, mp, max_iters=10_000), ens, X0)
    assert trace.diverged
    assert trace.iterations < 10_000
    assert trace.to_csv().strip().splitlines()[-1].endswith(",1")


def test_config_validation():
    mp = strongly_connected_pair(0)
    with pytest.raises(ValueError):
        SolverConfig(0.1, mp, max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(0.0, mp)
    with pytest.raises(ValueError):
        SolverConfig(0.1, mp, variant="push")
    with pytest.raises(ValueError):
        SolverConfig(0.1, None)


def test_run_rejects_bad_static_topology():
    ens = make_quadratic_ensemble(2, 1, 0)
    # both graphs are 0 -> 1, so the root sets {0} and {1} are disjoint
    R = np.array([[1.0, 0.0], [0.5, 0.5]])
    C = np.array([[0.5, 0.0], [0.5, 1.0]])
    with pytest.raises(AssumptionViolation):
        run(SolverConfig(0.1, MixingPair.from_matrices(R, C)), ens)
    with pytest.raises(ShapeMismatch):
        run(SolverConfig(0.1, strongly_connected_pair(0, (5, 6))), ens)


def test_csv_is_deterministic_and_well_formed():
    mp = strongly_connected_pair(4)
    ens = make_huber_ensemble(mp.n, 2, 4)
    cfg = SolverConfig(0.1, mp, max_iters=200)
    a = run(cfg, ens).to_csv()
    b = run(cfg, ens).to_csv()
    assert a == b
    lines = a.splitlines()
    assert lines[0] == CSV_HEADER
    assert all(len(line.split(",")) == 10 for line in lines)
    assert lines[1].startswith("0,")


def test_time_varying_run_is_reproducible():
    g = random_strongly_connected(10, 25, 3)
    seq = GraphSequence(g, 0.5, frozenset(), 3)
    ens = make_huber_ensemble(10, 2, 3)
    cfg = SolverConfig(0.1, seq, variant="push_pull_half", max_iters=3000, stop_tolerance=1e-8)
    t1, t2 = run(cfg, ens), run(cfg, ens)
    assert t1.averaging == "plain" and not t1.static
    assert t1.to_csv() == t2.to_csv()
    assert t1.residual[-1] <= 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_lemma2_never_violated(seed):
    mp = strongly_connected_pair(seed)
    ens = make_huber_ensemble(mp.n, 3, seed)
    X0 = np.random.default_rng(seed).standard_normal((mp.n, 3)) * 4
    trace = run(SolverConfig(0.05, mp, max_iters=300), ens, X0, check_lemma2=True)
    assert trace.lemma2_violations == 0
    s = init(ens, X0)
    assert lemma2_holds(s, ens, mp.u, trace.x_star) == (True, True)


def test_centralized_gd_contracts():
    ens = make_quadratic_ensemble(4, 3, 2, 1.0, 4.0)
    x_star = global_optimum(ens)
    x0 = x_star + np.array([3.0, -1.0, 2.0])
    for ap in (0.05, 0.2, 2 / 5):
        e = centralized_gd(ens, x0, ap, 40)
        live = e[:-1] > 1e-10
        ratios = e[1:][live] / e[:-1][live]
        assert np.all(ratios <= 1 - ap * ens.mu + 1e-12)
    assert np.all(centralized_gd(ens, x_star, 0.1, 10) <= 1e-14)


def test_centralized_gd_step_range():
    ens = make_quadratic_ensemble(2, 2, 0, 1.0, 3.0)
    with pytest.raises(StepSizeOutOfRange):
        centralized_gd(ens, np.zeros(2), 0.0, 5)
    with pytest.raises(StepSizeOutOfRange):
        centralized_gd(ens, np.zeros(2), 0.51, 5)
