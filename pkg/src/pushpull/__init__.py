"""Push-Pull gradient method over directed graphs, with its convergence certificate."""

from .analysis import (
    StepSizeCertificate,
    TransitionMatrix,
    build_transition_matrix,
    cubic_radius_criterion,
    small_alpha_rate_check,
    step_size_bound,
    verify_lemma7_along_trace,
)
from .graph import DirectedGraph, GraphSequence, masked_graphs, random_strongly_connected, root_set
from .mixing import MixingPair, check_assumptions, left_perron_u, right_perron_v
from .norms import NormSystem, WeightedNorm, block_norm, build_contraction_norm
from .objectives import ObjectiveEnsemble, global_optimum, make_huber_ensemble, make_quadratic_ensemble
from .solver import SolverConfig, SolverTrace, centralized_gd, run

__version__ = "0.1.0"

__all__ = [
    "DirectedGraph",
    "GraphSequence",
    "MixingPair",
    "NormSystem",
    "ObjectiveEnsemble",
    "SolverConfig",
    "SolverTrace",
    "StepSizeCertificate",
    "TransitionMatrix",
    "WeightedNorm",
    "block_norm",
    "build_contraction_norm",
    "build_transition_matrix",
    "centralized_gd",
    "check_assumptions",
    "cubic_radius_criterion",
    "global_optimum",
    "left_perron_u",
    "make_huber_ensemble",
    "make_quadratic_ensemble",
    "masked_graphs",
    "random_strongly_connected",
    "right_perron_v",
    "root_set",
    "run",
    "small_alpha_rate_check",
    "step_size_bound",
    "verify_lemma7_along_trace",
]
