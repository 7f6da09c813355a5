"""Command-line entry point: ``conesmc simulate | certify | decompose``.

Exit codes
----------
simulate   0 success, 2 invalid config, 3 solver failure or state guard
certify    0 all properties hold, 1 some property failed, 2 bad arguments
decompose  0 admissible decomposition found, 2 invalid config,
           4 best two-norm of F_bar is >= 1
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .certify import SUITES, run_suite
from .config import (
    ConfigError,
    build_experiment,
    build_pso_settings,
    build_sample_set,
    config_hash,
    load_config,
    manipulator_case_condition,
)
from .controller import check_admissibility
from .decomposition import pso_search
from .errors import SMCError, SolverFailure, StateGuardViolation
from .simulator import compute_metrics, lyapunov_audit, run_closed_loop, write_trajectory_csv

log = logging.getLogger("conesmc")

EXIT_OK = 0
EXIT_CERTIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_RUNTIME = 3
EXIT_NOT_CERTIFIABLE = 4


def _setup_logging() -> None:
    level = os.environ.get("SMC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _write_json(path: Path, payload: dict) -> None:
    """Write-then-rename so a failed run never leaves a half-written file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_dir(args, cfg: dict, name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.get("output", os.path.join("runs", name)))


def _load(args):
    try:
        return load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return None


def cmd_simulate(args) -> int:
    loaded = _load(args)
    if loaded is None:
        return EXIT_INVALID
    cfg, name = loaded
    try:
        exp = build_experiment(cfg, args.seed)
    except (ConfigError, SMCError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = _out_dir(args, cfg, name)
    summary = {
        "config": name,
        "config_hash": config_hash(cfg),
        "seed": exp.sim.seed,
        "plant": exp.plant.kind,
        "admissibility": check_admissibility(exp.controller.decomposition.F_bar).to_dict(),
    }
    if hasattr(exp.plant, "true_params"):
        tp = exp.plant.true_params
        summary["true_params"] = {k: v for k, v in tp.__dict__.items() if isinstance(v, float)}
    if exp.plant.kind == "manipulator":
        cond = manipulator_case_condition(cfg)
        cond["admissible_by_norm"] = summary["admissibility"]["admissible"]
        summary["elementwise_condition"] = cond

    start = time.perf_counter()
    try:
        traj = run_closed_loop(exp.plant, exp.controller, exp.sim)
    except (SolverFailure, StateGuardViolation) as exc:
        summary["status"] = "failed"
        summary["failure"] = {"error": type(exc).__name__, "message": str(exc),
                              "t": exc.t, "state": np.asarray(exc.state).tolist()}
        summary["wall_clock_s"] = time.perf_counter() - start
        _write_json(out / f"{name}_summary.json", summary)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    elapsed = time.perf_counter() - start

    metrics = compute_metrics(traj, exp.bands, exp.tail_fraction)
    summary["status"] = "ok"
    summary["metrics"] = metrics.to_dict()
    summary["converged"] = metrics.converged
    if exp.sim.lyapunov_audit:
        audit = lyapunov_audit(traj, exp.controller.rho, exp.audit_boundary, exp.audit_c)
        summary["lyapunov_audit"] = audit.to_dict()
        summary["audit_violations"] = len(audit)
    summary["wall_clock_s"] = elapsed
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}_trajectory.csv"
    write_trajectory_csv(traj, csv_path)
    summary["trajectory_csv"] = csv_path.name
    _write_json(out / f"{name}_summary.json", summary)
    print(json.dumps({k: summary[k] for k in ("config", "seed", "converged", "status")}))
    return EXIT_OK


def cmd_certify(args) -> int:
    F_bar = None
    if args.inject_f_bar:
        try:
            F_bar = np.array(json.loads(args.inject_f_bar), dtype=float)
            if F_bar.ndim != 2 or F_bar.shape[0] != F_bar.shape[1]:
                raise ValueError("must be a square matrix")
        except (ValueError, json.JSONDecodeError) as exc:
            print(f"--inject-f-bar: {exc}", file=sys.stderr)
            return EXIT_INVALID
    try:
        report = run_suite(args.suite, trials=args.trials, seed=args.seed or 0, F_bar=F_bar)
    except ValueError as exc:
        print(f"certify: {exc}", file=sys.stderr)
        return EXIT_INVALID
    payload = report.to_dict()
    if args.out:
        _write_json(Path(args.out) / f"certify_{args.suite}.json", payload)
    print(json.dumps(payload, indent=2))
    return EXIT_OK if report.passed else EXIT_CERTIFY_FAILED


def cmd_decompose(args) -> int:
    loaded = _load(args)
    if loaded is None:
        return EXIT_INVALID
    cfg, name = loaded
    try:
        samples = build_sample_set(cfg)
        settings = build_pso_settings(cfg, args.seed)
    except (ConfigError, SMCError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    start = time.perf_counter()
    result = pso_search(samples, settings)
    report = result.report()
    report["config"] = name
    report["sample_count"] = len(samples)
    report["wall_clock_s"] = time.perf_counter() - start
    report["certifiable"] = report["norms"]["two"] < 1.0
    _write_json(_out_dir(args, cfg, name) / f"{name}_decomposition.json", report)
    print(json.dumps({"config": name, "norms": report["norms"], "certifiable": report["certifiable"]}))
    return EXIT_OK if report["certifiable"] else EXIT_NOT_CERTIFIABLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conesmc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a closed-loop experiment")
    p.add_argument("--config", required=True, help="config file or bundled config name")
    p.add_argument("--seed", type=int, help="override sim.seed")
    p.add_argument("--out", help="output directory (default: config 'output')")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", help="run a randomised certification suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for the JSON report")
    p.add_argument("--inject-f-bar", metavar="JSON",
                   help="uniqueness suite only: use H = S(v) F_bar with this matrix")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("decompose", help="search a gain decomposition for a plant box")
    p.add_argument("--config", required=True, help="config file or bundled config name")
    p.add_argument("--seed", type=int, help="override the PSO seed")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_decompose)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
