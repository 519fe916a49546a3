"""Command line front end: ``pushpull {check,bound,run,sweep}``.

Exit codes: 0 success, 2 assumption violation, 3 divergence, 4 input error.
Log verbosity comes from ``PUSHPULL_LOG_LEVEL`` (default ``WARNING``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .errors import AssumptionViolation, PushPullError
from .graph import read_edge_list
from .mixing import (
    MixingPair,
    check_assumptions,
    column_stochastic_from_graph,
    read_matrix_csv,
    row_stochastic_from_graph,
    FILE_STOCHASTIC_TOL,
)

EXIT_OK = 0
EXIT_ASSUMPTION = 2
EXIT_DIVERGED = 3
EXIT_INPUT = 4


def _dump(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (frozenset, set)):
            return sorted(o)
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(type(o).__name__)

    return json.dumps(obj, indent=2, default=default)


def _config(args) -> harness.ExperimentConfig:
    if args.preset and args.config:
        raise harness.ConfigError("give either --preset or --config, not both")
    if args.preset:
        cfg = harness.load_preset(args.preset)
    elif args.config:
        cfg = harness.load_config(args.config)
    else:
        raise harness.ConfigError("need --preset or --config")
    if args.seed is not None:
        for section in (cfg.topology, cfg.objective):
            section["seed"] = args.seed
    if args.alpha is not None:
        cfg.alpha = args.alpha if args.alpha == "theorem" else float(args.alpha)
        cfg.__post_init__()
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "max_iters", None) is not None:
        cfg.max_iters = args.max_iters
    return cfg


def cmd_check(args) -> int:
    if args.R and args.C:
        R = read_matrix_csv(args.R, "row")
        C = read_matrix_csv(args.C, "column")
        tol = FILE_STOCHASTIC_TOL
    elif args.graph:
        g_R = read_edge_list(args.graph)
        g_C = read_edge_list(args.graph_C) if args.graph_C else g_R
        R, C = row_stochastic_from_graph(g_R), column_stochastic_from_graph(g_C)
        tol = 1e-12
    else:
        raise harness.ConfigError("need --R and --C matrix files, or --graph")
    report = check_assumptions(R, C, tol=tol)
    out = {k: getattr(report, k) for k in report.__dataclass_fields__}
    out["cross_check"] = report.cross_check
    out["passed"] = report.passed
    if report.passed:
        out.update(MixingPair.from_matrices(R, C).summary())
    print(_dump(out))
    print(f"u^T v = {report.uv:.12g}")
    return EXIT_OK if report.passed else EXIT_ASSUMPTION


def cmd_bound(args) -> int:
    cfg = _config(args)
    if not cfg.is_static:
        print("no static certificate: time-varying topologies are not covered by the bound", file=sys.stderr)
        return EXIT_INPUT
    topology = harness.build_topology(cfg)
    ensemble = harness.build_ensemble(cfg, topology.n)
    report = harness.certificate_report(cfg, topology, ensemble)
    print(_dump(report))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    outcome = harness.execute(cfg)
    if cfg.out:
        out = Path(cfg.out)
        outcome.trace.write_csv(out)
        outcome.ensemble.save(out.with_suffix(".ensemble.json"))
        outcome.summary["csv"] = str(out)
    print(_dump(outcome.summary))
    return EXIT_DIVERGED if outcome.trace.diverged else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    grid = [float(a) for a in args.grid.split(",")] if args.grid else (
        cfg.alpha["sweep"] if isinstance(cfg.alpha, dict) else None)
    if not grid:
        raise harness.ConfigError("sweep needs --grid or a sweep alpha in the config")
    results = harness.sweep(cfg, grid)
    lines = ["alpha,iterations,final_residual,diverged,reached"]
    lines += [f"{r.alpha!r},{r.iterations},{r.final_residual!r},{int(r.diverged)},{int(r.reached)}"
              for r in results]
    text = "\n".join(lines) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)
    print(f"best alpha: {harness.best_alpha(results)!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pushpull", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a mixing pair")
    p.add_argument("--R", help="row-stochastic matrix CSV")
    p.add_argument("--C", help="column-stochastic matrix CSV")
    p.add_argument("--graph", help="edge-list file (used for both sides unless --graph-C)")
    p.add_argument("--graph-C", dest="graph_C", help="edge-list file for the column-stochastic side")
    p.set_defaults(func=cmd_check)

    for name, func, help_ in [
        ("bound", cmd_bound, "print the step-size certificate"),
        ("run", cmd_run, "run an experiment and write its trace"),
        ("sweep", cmd_sweep, "sweep step sizes"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--preset", choices=harness.PRESETS)
        p.add_argument("--seed", type=int, help="override topology and objective seeds")
        p.add_argument("--alpha", help="step size or 'theorem'")
        p.add_argument("--out", help="output path")
        p.add_argument("--max-iters", dest="max_iters", type=int)
        if name == "sweep":
            p.add_argument("--grid", help="comma-separated step sizes")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PUSHPULL_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AssumptionViolation as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (harness.ConfigError, PushPullError, ValueError, OSError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
