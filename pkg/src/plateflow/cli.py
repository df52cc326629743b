"""Batch front end: solve / verify / refine / penalty-study.

Every command reads one config file and writes deterministic artifacts into
the output directory: field CSVs in fixed node order and a summary JSON with
sorted keys.  Wall-clock timings are only written (to a separate file) when
the config opts in, so identical configs produce byte-identical outputs.

Exit codes: 0 ok, 1 at least one check failed, 2 usage or config error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import fileio
from .config import ConfigError, RunConfig, load_config
from .diagnostics import (
    cauchy_difference,
    holder_moduli,
    run_invariant_suite,
    suite_passed,
)
from .flow import StepFailure, Trajectory, run_flow, trajectory_aggregates
from .grid import l2_norm
from .problem import NonFinite, ObstacleViolation, BoundarySignError
from .step import NoConvergence, DescentViolation, solve_step_active_set, solve_step_penalty

log = logging.getLogger("plateflow")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _step_rows(tr: Trajectory) -> list[dict]:
    grid = tr.problem.grid
    rows = []
    for i, s in enumerate(tr.steps, start=1):
        rows.append(
            {
                "step": i,
                "time": i * tr.tau,
                "energy": s.energy,
                "velocity_l2": l2_norm(grid, s.velocity),
                "mass": s.mass,
                "multiplier_negativity": s.multiplier_negativity,
                "feasibility_defect": s.feasibility_defect,
                "active_nodes": int(np.count_nonzero(s.active_set)),
                "iterations": s.iterations,
            }
        )
    return rows


def _check_payload(reports) -> list[dict]:
    return [
        {
            "name": r.name,
            "bound": r.bound,
            "observed": r.observed,
            "tolerance": r.tolerance,
            "passed": r.passed,
            "margin": r.margin,
            "details": r.details,
        }
        for r in reports
    ]


def _emit_fields(out: str, tr: Trajectory, which: str) -> None:
    grid = tr.problem.grid
    if which == "none":
        return
    indices = [tr.n_steps] if which == "last" else list(range(tr.n_steps + 1))
    for k in indices:
        fileio.write_field_csv(os.path.join(out, f"field_step_{k:04d}.csv"), grid, tr.state(k))


def _aggregates_payload(tr: Trajectory) -> dict:
    agg = trajectory_aggregates(tr)
    return {
        "dissipation": agg.dissipation,
        "mass_sq_sum": agg.mass_sq_sum,
        "w2inf_sum": agg.w2inf_sum,
        "initial_energy": float(tr.energies[0]),
        "final_energy": float(tr.energies[-1]),
    }


def cmd_solve(cfg: RunConfig, out: str, summary: dict) -> int:
    grid, problem = cfg.build()
    tr = run_flow(problem, cfg.T, cfg.n, cfg.step_config())
    summary["steps"] = _step_rows(tr)
    if cfg.emit_aggregates:
        summary["aggregates"] = _aggregates_payload(tr)
    _emit_fields(out, tr, cfg.emit_fields)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: str, summary: dict) -> int:
    grid, problem = cfg.build()
    tr = run_flow(problem, cfg.T, cfg.n, cfg.step_config())
    summary["steps"] = _step_rows(tr)
    if cfg.emit_aggregates:
        summary["aggregates"] = _aggregates_payload(tr)
    _emit_fields(out, tr, cfg.emit_fields)
    reports = run_invariant_suite(tr)
    if cfg.emit_diagnostics:
        summary["checks"] = _check_payload(reports)
        moduli = holder_moduli(tr)
        summary["holder_moduli"] = {
            "l2_quotient": moduli.l2_quotient,
            "grad_sup_quotient": moduli.grad_sup_quotient,
            "sup_quotient": moduli.sup_quotient,
            "exponents": moduli.exponents,
        }
    width = max(len(r.name) for r in reports)
    for r in reports:
        verdict = "PASS" if r.passed else "FAIL"
        bound = "monitored" if r.bound is None else f"{r.bound:.6g}"
        print(f"{r.name:<{width}}  {verdict}  observed={r.observed:.6g}  bound={bound}")
    return EXIT_OK if suite_passed(reports) else EXIT_CHECK_FAILED


def cmd_refine(cfg: RunConfig, out: str, summary: dict) -> int:
    grid, problem = cfg.build()
    runs = []
    for mult in (1, 2, 4, 8):
        n = cfg.n * mult
        runs.append(run_flow(problem, cfg.T, n, cfg.step_config(tau=cfg.T / n)))
    rows = []
    for idx, tr in enumerate(runs):
        agg = trajectory_aggregates(tr)
        row = {
            "n": tr.n_steps,
            "tau": tr.tau,
            "cauchy_vs_prev": cauchy_difference(runs[idx - 1], tr) if idx > 0 else float("nan"),
            "dissipation": agg.dissipation,
            "mass_sq_sum": agg.mass_sq_sum,
            "w2inf_sum": agg.w2inf_sum,
        }
        rows.append(row)
    summary["refine"] = rows
    header = ["n", "tau", "cauchy_vs_prev", "dissipation", "mass_sq_sum", "w2inf_sum"]
    lines = ["# " + ", ".join(header)]
    for row in rows:
        lines.append(", ".join(fileio.FLOAT_FMT % row[k] for k in header))
    with open(os.path.join(out, "refine.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_penalty_study(cfg: RunConfig, out: str, summary: dict) -> int:
    grid, problem = cfg.build()
    step_cfg = cfg.step_config()
    tau = cfg.tau
    u_prev = problem.u0
    f = problem.f_interior
    exact, _, _ = solve_step_active_set(grid, u_prev, f, tau, step_cfg)
    fileio.write_field_csv(os.path.join(out, "penalty_exact.csv"), grid, exact)
    rows = []
    w = u_prev.copy()
    for k, eps in enumerate(step_cfg.penalty_eps_schedule):
        w, record = solve_step_penalty(grid, u_prev, f, tau, eps, step_cfg, w_start=w)
        fileio.write_field_csv(os.path.join(out, f"penalty_w_{k:02d}.csv"), grid, w)
        rows.append(
            {
                "eps": eps,
                "newton_iters": record.newton_iters,
                "residual": record.residual,
                "violation_sup": record.violation_sup,
                "violation_l2": record.violation_l2,
                "penalty_mass": record.penalty_mass,
                "distance_l2": l2_norm(grid, w - exact),
            }
        )
    summary["penalty_study"] = rows
    header = [
        "eps",
        "newton_iters",
        "residual",
        "violation_sup",
        "violation_l2",
        "penalty_mass",
        "distance_l2",
    ]
    lines = ["# " + ", ".join(header)]
    for row in rows:
        lines.append(", ".join(fileio.FLOAT_FMT % row[k] for k in header))
    with open(os.path.join(out, "penalty_study.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "refine": cmd_refine,
    "penalty-study": cmd_penalty_study,
}


def run_command(cmd: str, cfg: RunConfig, out: str) -> int:
    """Execute one command; solver failures land in the summary with exit 3."""
    os.makedirs(out, exist_ok=True)
    summary: dict = {"command": cmd, "config": cfg.echo}
    started = time.perf_counter()
    try:
        status = _COMMANDS[cmd](cfg, out, summary)
    except (StepFailure, NoConvergence, DescentViolation) as exc:
        cause = getattr(exc, "cause", exc)
        summary["error"] = {
            "type": type(cause).__name__,
            "message": str(exc),
            "step": getattr(exc, "index", None),
        }
        status = EXIT_SOLVER
        log.error("solver failure: %s", exc)
    fileio.write_json(os.path.join(out, "summary.json"), summary)
    if cfg.emit_timings:
        fileio.write_json(
            os.path.join(out, "timings.json"),
            {"command": cmd, "wall_seconds": time.perf_counter() - started},
        )
    return status


def main(argv=None) -> int:
    level = os.environ.get("PLATEFLOW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = argparse.ArgumentParser(
        prog="plateflow",
        description="Implicit obstacle-flow solver and verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "run the flow and emit trajectory files"),
        ("verify", "solve plus the full invariant check table"),
        ("refine", "run at n, 2n, 4n, 8n and emit the refinement table"),
        ("penalty-study", "study one step along the penalty schedule"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for line, message in exc.errors:
            print(f"config error (line {line}): {message}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_command(args.command, cfg, args.out)
    except (BoundarySignError, ObstacleViolation, NonFinite, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
