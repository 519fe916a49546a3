"""Push-Pull iterations, the experiment loop and a centralized baseline.

State is stacked row-wise: row ``i`` of ``X`` (``Y``) is agent ``i``'s
decision (gradient tracker). One step of the ATC variant is

    X+ = R (X - alpha Y)
    Y+ = C (Y + grad F(X+) - grad F(X))

and the half variant mixes only the tracker, ``Y+ = C Y + grad F(X+) - grad F(X)``.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionViolation, NonFiniteIterate, ShapeMismatch, StepSizeOutOfRange
from .graph import GraphSequence, masked_graphs
from .mixing import MixingPair, check_assumptions, column_stochastic_from_graph, row_stochastic_from_graph
from .norms import NormSystem, block_norm
from .objectives import ObjectiveEnsemble, global_optimum

log = logging.getLogger(__name__)

VARIANTS = ("push_pull", "push_pull_half", "centralized")
DIVERGENCE_THRESHOLD = 1e6
CSV_HEADER = "k,residual,consensus_R,consensus_2,tracking_C,optgap,comp1,comp2,comp3,divergence_flag"


@dataclass(frozen=True)
class IterateState:
    X: np.ndarray
    Y: np.ndarray
    k: int
    grad: np.ndarray  # grad F(X), carried so each step evaluates gradients once


def init(ensemble: ObjectiveEnsemble, X0) -> IterateState:
    X0 = np.array(X0, dtype=float)
    if X0.shape != (ensemble.n, ensemble.p):
        raise ShapeMismatch(f"X0 has shape {X0.shape}, expected ({ensemble.n}, {ensemble.p})")
    G = ensemble.stacked_gradient(X0)
    return IterateState(X0, G.copy(), 0, G)


def _checked(state: IterateState) -> IterateState:
    if not (np.all(np.isfinite(state.X)) and np.all(np.isfinite(state.Y))):
        raise NonFiniteIterate(f"non-finite iterate at k={state.k}")
    return state


def step_push_pull(state: IterateState, ensemble: ObjectiveEnsemble, R, C, alpha: float) -> IterateState:
    with np.errstate(over="ignore", invalid="ignore"):
        X = R @ (state.X - alpha * state.Y)
        G = ensemble.stacked_gradient(X)
        Y = C @ (state.Y + G - state.grad)
    return _checked(IterateState(X, Y, state.k + 1, G))


def step_push_pull_half(state: IterateState, ensemble: ObjectiveEnsemble, R, C, alpha: float) -> IterateState:
    with np.errstate(over="ignore", invalid="ignore"):
        X = R @ (state.X - alpha * state.Y)
        G = ensemble.stacked_gradient(X)
        Y = C @ state.Y + G - state.grad
    return _checked(IterateState(X, Y, state.k + 1, G))


def _step_centralized(state: IterateState, ensemble: ObjectiveEnsemble, R, C, alpha: float) -> IterateState:
    # every row holds the same point; move it along the average gradient
    with np.errstate(over="ignore", invalid="ignore"):
        x = state.X[0] - alpha * state.grad.mean(axis=0)
        X = np.tile(x, (ensemble.n, 1))
        G = ensemble.stacked_gradient(X)
    return _checked(IterateState(X, G.copy(), state.k + 1, G))


STEPS = {
    "push_pull": step_push_pull,
    "push_pull_half": step_push_pull_half,
    "centralized": _step_centralized,
}


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    topology: MixingPair | GraphSequence | None = None
    variant: str = "push_pull"
    max_iters: int = 10_000
    stop_tolerance: float = 1e-12

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.variant != "centralized" and self.topology is None:
            raise ValueError("a topology is required for the distributed variants")


@dataclass
class SolverTrace:
    """Per-iteration diagnostics of one run.

    ``comp`` holds the monitored 3-vector ``[||xbar - x*||_2, ||X - 1 xbar||_R,
    ||Y - v ybar||_C]``. For time-varying topologies there are no Perron
    vectors or contraction norms, so plain averages and 2-norms are used and
    ``averaging`` is ``"plain"``.
    """

    alpha: float
    variant: str
    static: bool
    averaging: str
    x_star: np.ndarray
    k: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    consensus_R: list = field(default_factory=list)
    consensus_2: list = field(default_factory=list)
    tracking_C: list = field(default_factory=list)
    optgap: list = field(default_factory=list)
    comp: list = field(default_factory=list)
    diverged: bool = False
    lemma2_violations: int = 0
    norm_gamma: tuple | None = None
    final_state: IterateState | None = None

    def __len__(self) -> int:
        return len(self.k)

    @property
    def iterations(self) -> int:
        return self.k[-1] if self.k else 0

    @property
    def converged(self) -> bool:
        return not self.diverged

    def composite(self) -> np.ndarray:
        return np.array(self.comp).reshape(-1, 3)

    def iterations_to(self, threshold: float) -> int | None:
        for k, r in zip(self.k, self.residual):
            if r <= threshold:
                return k
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        last = len(self.k) - 1
        for i in range(len(self.k)):
            flag = int(self.diverged and i == last)
            c1, c2, c3 = self.comp[i]
            vals = [self.residual[i], self.consensus_R[i], self.consensus_2[i], self.tracking_C[i],
                    self.optgap[i], c1, c2, c3]
            buf.write(f"{self.k[i]}," + ",".join(repr(float(x)) for x in vals) + f",{flag}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def fit_rate(series, floor: float = 1e-300) -> float:
    """Geometric rate from a least-squares line through ``log(series)``."""
    s = np.asarray(series, dtype=float)
    k = np.arange(s.size)
    ok = np.isfinite(s) & (s > floor)
    if ok.sum() < 2:
        return float("nan")
    slope = np.polyfit(k[ok], np.log(s[ok]), 1)[0]
    return float(np.exp(slope))


def lemma2_holds(state: IterateState, ensemble: ObjectiveEnsemble, u: np.ndarray, x_star: np.ndarray,
                 rtol: float = 1e-9) -> tuple[bool, bool]:
    """Check the two Lipschitz consequences at one iterate.

    ``||ybar - g|| <= L/sqrt(n) ||X - 1 xbar||`` and ``||g|| <= L ||xbar - x*||``,
    with ``g`` the average gradient at the consensual point ``1 xbar``.
    """
    n, L = ensemble.n, ensemble.L
    xbar = u @ state.X / n
    ybar = state.Y.sum(axis=0) / n
    g = ensemble.total_gradient(xbar) / n
    lhs1 = np.linalg.norm(ybar - g)
    rhs1 = L / np.sqrt(n) * np.linalg.norm(state.X - xbar)
    lhs2 = np.linalg.norm(g)
    rhs2 = L * np.linalg.norm(xbar - x_star)
    scale = 1e-12 * (1.0 + np.abs(state.grad).max())
    return bool(lhs1 <= rhs1 * (1 + rtol) + scale), bool(lhs2 <= rhs2 * (1 + rtol) + scale)


class _Monitor:
    def __init__(self, trace: SolverTrace, ensemble, X0, x_star, mixing=None, norms=None):
        self.trace = trace
        self.n = ensemble.n
        self.x_star = x_star
        self.ones = np.ones(self.n)
        if mixing is not None:
            self.u, self.v = mixing.u, mixing.v
            self.norm_R, self.norm_C = norms.norm_R, norms.norm_C
        else:
            self.u = self.v = self.ones
            self.norm_R = self.norm_C = None
        d0 = float(np.sum((X0 - x_star) ** 2))
        self.denom = d0 if d0 > 0 else 1.0

    def record(self, state: IterateState) -> float:
        t = self.trace
        X, Y = state.X, state.Y
        xbar = self.u @ X / self.n
        ybar = Y.sum(axis=0) / self.n
        cons = X - xbar
        track = Y - np.outer(self.v, ybar)
        residual = float(np.sum((X - self.x_star) ** 2)) / self.denom
        gap = float(np.linalg.norm(xbar - self.x_star))
        c2 = block_norm(cons)
        cR = block_norm(cons, self.norm_R)
        tC = block_norm(track, self.norm_C)
        t.k.append(state.k)
        t.residual.append(residual)
        t.consensus_R.append(cR)
        t.consensus_2.append(c2)
        t.tracking_C.append(tC)
        t.optgap.append(gap)
        t.comp.append((gap, cR, tC))
        return residual


def run(config: SolverConfig, ensemble: ObjectiveEnsemble, X0=None, norms: NormSystem | None = None,
        x_star=None, check_lemma2: bool = False) -> SolverTrace:
    """Iterate until the normalized residual drops to ``stop_tolerance`` or
    ``max_iters`` steps have been taken.

    Divergence (non-finite entries or residual above 1e6) ends the run early
    with ``trace.diverged`` set instead of raising.
    """
    if X0 is None:
        X0 = np.zeros((ensemble.n, ensemble.p))
    x_star = global_optimum(ensemble) if x_star is None else np.asarray(x_star, dtype=float)
    topo = config.topology
    static = isinstance(topo, MixingPair)
    mixing = None
    if static:
        report = check_assumptions(topo.R, topo.C)
        if not report.passed:
            raise AssumptionViolation(f"static topology fails: {', '.join(report.failures())}")
        mixing = topo
        if mixing.n != ensemble.n:
            raise ShapeMismatch(f"topology has {mixing.n} agents, ensemble has {ensemble.n}")
        norms = norms or NormSystem.for_mixing(mixing)
    elif isinstance(topo, GraphSequence) and topo.base.n != ensemble.n:
        raise ShapeMismatch(f"topology has {topo.base.n} agents, ensemble has {ensemble.n}")

    state = init(ensemble, X0)
    if config.variant == "centralized":
        state = init(ensemble, np.tile(np.asarray(X0, dtype=float).mean(axis=0), (ensemble.n, 1)))
    trace = SolverTrace(config.alpha, config.variant, static, "perron" if static else "plain", x_star)
    if static:
        trace.norm_gamma = (norms.norm_R.gamma, norms.norm_C.gamma)
    mon = _Monitor(trace, ensemble, state.X, x_star, mixing, norms)
    residual = mon.record(state)
    step = STEPS[config.variant]
    u = mixing.u if static else np.ones(ensemble.n)

    for k in range(config.max_iters):
        if residual <= config.stop_tolerance:
            break
        if static:
            R, C = mixing.R, mixing.C
        elif isinstance(topo, GraphSequence):
            g_R, g_C = masked_graphs(topo, k)
            R, C = row_stochastic_from_graph(g_R), column_stochastic_from_graph(g_C)
        else:
            R = C = None
        if check_lemma2:
            ok1, ok2 = lemma2_holds(state, ensemble, u, x_star)
            trace.lemma2_violations += (not ok1) + (not ok2)
        try:
            state = step(state, ensemble, R, C, config.alpha)
        except NonFiniteIterate:
            log.warning("non-finite iterate at k=%d, alpha=%g", k + 1, config.alpha)
            trace.diverged = True
            break
        residual = mon.record(state)
        if residual > DIVERGENCE_THRESHOLD:
            log.warning("residual %.3g above divergence threshold at k=%d", residual, state.k)
            trace.diverged = True
            break
    trace.final_state = state
    return trace


def centralized_gd(ensemble: ObjectiveEnsemble, x0, alpha_prime: float, iters: int,
                   x_star=None) -> np.ndarray:
    """Gradient descent on the average objective; returns ``||x_k - x*||_2`` for ``k = 0..iters``."""
    limit = 2.0 / (ensemble.mu + ensemble.L)
    if not 0 < alpha_prime <= limit * (1 + 1e-12):
        raise StepSizeOutOfRange(f"alpha' must lie in (0, {limit:.6g}], got {alpha_prime}")
    x_star = global_optimum(ensemble) if x_star is None else np.asarray(x_star, dtype=float)
    x = np.array(x0, dtype=float)
    errs = [np.linalg.norm(x - x_star)]
    for _ in range(iters):
        x = x - alpha_prime * ensemble.total_gradient(x) / ensemble.n
        errs.append(np.linalg.norm(x - x_star))
    return np.array(errs)


def with_alpha(config: SolverConfig, alpha: float) -> SolverConfig:
    return replace(config, alpha=alpha)
