"""Experiment configs, presets and the work behind each CLI subcommand."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import build_transition_matrix, step_size_bound, verify_lemma7_along_trace
from .errors import StepSizeOutOfRange
from .graph import (
    GraphSequence,
    add_leader_subnet,
    choose_leaders,
    random_strongly_connected,
    read_edge_list,
    star,
)
from .mixing import MixingPair
from .norms import DEFAULT_GAMMA_FRACTION, NormSystem
from .objectives import ObjectiveEnsemble, global_optimum, make_huber_ensemble, make_quadratic_ensemble
from .solver import SolverConfig, SolverTrace, fit_rate, run

log = logging.getLogger(__name__)

PRESETS = ("static-12", "static-12-certified", "tv-50", "leader-follower", "star")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    topology: dict
    objective: dict
    variant: str = "push_pull"
    alpha: Any = "theorem"
    max_iters: int = 10_000
    stop_tolerance: float = 1e-12
    gamma_fraction: float = DEFAULT_GAMMA_FRACTION
    out: str | None = None
    name: str = "custom"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        kinds = {"file", "random", "star", "sequence"}
        if not isinstance(self.topology, dict) or self.topology.get("type") not in kinds:
            raise ConfigError(f"topology needs exactly one source among {sorted(kinds)}")
        if isinstance(self.alpha, (int, float)) and not self.alpha > 0:
            raise ConfigError("numeric alpha must be positive")
        if isinstance(self.alpha, str) and self.alpha != "theorem":
            raise ConfigError(f"alpha must be a number, 'theorem' or {{'sweep': [...]}}, got {self.alpha!r}")
        if isinstance(self.alpha, dict) and not self.alpha.get("sweep"):
            raise ConfigError("sweep alpha needs a nonempty grid")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"topology", "objective", "variant", "alpha", "max_iters", "stop_tolerance",
                 "gamma_fraction", "out", "name"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "topology" not in data or "objective" not in data:
            raise ConfigError("config needs 'topology' and 'objective'")
        return cls(**data)

    @property
    def is_static(self) -> bool:
        return self.topology["type"] != "sequence"


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("pushpull.presets").joinpath(f"{name}.json").read_text()
    return ExperimentConfig.from_dict(json.loads(text))


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def _static_graphs(spec: dict):
    kind = spec["type"]
    if kind == "random":
        g = random_strongly_connected(spec["n"], spec["m"], spec.get("seed", 0))
        return g, g
    if kind == "star":
        return star(spec.get("n", 4), spec.get("center", 0))
    if kind == "file":
        g_R = read_edge_list(spec["path"])
        g_C = read_edge_list(spec["path_C"]) if "path_C" in spec else g_R
        return g_R, g_C
    raise ConfigError(f"not a static topology: {kind}")


def build_topology(cfg: ExperimentConfig) -> MixingPair | GraphSequence:
    spec = cfg.topology
    if spec["type"] != "sequence":
        return MixingPair.from_graphs(*_static_graphs(spec))
    base, _ = _static_graphs(spec["base"])
    seed = spec.get("seed", 0)
    leaders = spec.get("leaders", [])
    if isinstance(leaders, int):
        leaders = choose_leaders(base.n, leaders, seed) if leaders else frozenset()
    leaders = frozenset(leaders)
    if leaders:
        base = add_leader_subnet(base, leaders, seed)
    masked = leaders if spec.get("mask_leaders", True) else frozenset()
    return GraphSequence(base, spec.get("activation", 1.0), masked, seed)


def agent_count(topology) -> int:
    return topology.n if isinstance(topology, MixingPair) else topology.base.n


def build_ensemble(cfg: ExperimentConfig, n: int) -> ObjectiveEnsemble:
    spec = cfg.objective
    kind = spec.get("type")
    if kind == "huber":
        return make_huber_ensemble(n, spec.get("p", 2), spec.get("seed", 0),
                                   spec.get("delta", 1.0), spec.get("reg_mu", 0.1))
    if kind == "quadratic":
        return make_quadratic_ensemble(n, spec.get("p", 2), spec.get("seed", 0),
                                       spec.get("mu", 1.0), spec.get("L", 4.0))
    if kind == "file":
        return ObjectiveEnsemble.load(spec["path"])
    raise ConfigError(f"unknown objective family {kind!r}")


@dataclass
class SweepResult:
    alpha: float
    iterations: int
    final_residual: float
    diverged: bool
    reached: bool

    def key(self):
        # fewest iterations among runs that reached the tolerance, smaller alpha on ties
        return (not self.reached, self.diverged, self.iterations if self.reached else self.final_residual,
                self.alpha)


def sweep(cfg: ExperimentConfig, grid, topology=None, ensemble=None) -> list[SweepResult]:
    topology = topology or build_topology(cfg)
    ensemble = ensemble or build_ensemble(cfg, agent_count(topology))
    x_star = global_optimum(ensemble)
    results = []
    for alpha in grid:
        tr = run(SolverConfig(float(alpha), topology, cfg.variant, cfg.max_iters, cfg.stop_tolerance),
                 ensemble, x_star=x_star)
        reached = (not tr.diverged) and tr.residual[-1] <= cfg.stop_tolerance
        results.append(SweepResult(float(alpha), tr.iterations, tr.residual[-1], tr.diverged, reached))
    return results


def best_alpha(results: list[SweepResult]) -> float:
    return min(results, key=SweepResult.key).alpha


def certify(cfg: ExperimentConfig, topology: MixingPair, ensemble: ObjectiveEnsemble):
    norms = NormSystem.for_mixing(topology, cfg.gamma_fraction)
    cert = step_size_bound(topology, norms, ensemble.mu, ensemble.L)
    A = build_transition_matrix(topology, norms, ensemble.mu, ensemble.L, cert.alpha_max)
    return norms, cert, A


def certificate_report(cfg: ExperimentConfig, topology: MixingPair, ensemble: ObjectiveEnsemble) -> dict:
    norms, cert, A = certify(cfg, topology, ensemble)
    report = cert.to_dict()
    report.update(norms.summary())
    report["transition_matrix"] = A.to_dict()
    report["mixing"] = topology.summary()
    return report


@dataclass
class RunOutcome:
    trace: SolverTrace
    alpha: float
    ensemble: ObjectiveEnsemble
    summary: dict


def resolve_alpha(cfg, topology, ensemble) -> tuple[float, dict]:
    """Numeric step size for a config plus notes on how it was chosen."""
    if isinstance(cfg.alpha, (int, float)):
        return float(cfg.alpha), {"alpha_source": "given"}
    if cfg.alpha == "theorem":
        if not isinstance(topology, MixingPair):
            raise ConfigError("no static certificate for a time-varying topology")
        _, cert, _ = certify(cfg, topology, ensemble)
        return cert.alpha_max, {"alpha_source": "theorem", "binding_term": cert.binding_term}
    results = sweep(cfg, cfg.alpha["sweep"], topology, ensemble)
    return best_alpha(results), {"alpha_source": "sweep",
                                 "sweep": [r.__dict__ for r in results]}


def execute(cfg: ExperimentConfig) -> RunOutcome:
    topology = build_topology(cfg)
    ensemble = build_ensemble(cfg, agent_count(topology))
    alpha, notes = resolve_alpha(cfg, topology, ensemble)
    x_star = global_optimum(ensemble)
    norms = NormSystem.for_mixing(topology, cfg.gamma_fraction) if isinstance(topology, MixingPair) else None
    trace = run(SolverConfig(alpha, topology, cfg.variant, cfg.max_iters, cfg.stop_tolerance),
                ensemble, norms=norms, x_star=x_star)
    summary = {
        "name": cfg.name,
        "alpha": alpha,
        **notes,
        "iterations": trace.iterations,
        "final_residual": trace.residual[-1],
        "reached_tolerance": trace.residual[-1] <= cfg.stop_tolerance,
        "diverged": trace.diverged,
        "empirical_rate": fit_rate(np.sqrt(trace.residual)),
        "iterations_to_1e-6": trace.iterations_to(1e-6),
        "averaging": trace.averaging,
    }
    if isinstance(topology, MixingPair) and cfg.variant == "push_pull" and not trace.diverged:
        try:
            A = build_transition_matrix(topology, norms, ensemble.mu, ensemble.L, alpha)
        except StepSizeOutOfRange as exc:
            summary["lemma7"] = f"not applicable: {exc}"
        else:
            summary["lemma7"] = verify_lemma7_along_trace(trace, A).to_dict()
    return RunOutcome(trace, alpha, ensemble, summary)
