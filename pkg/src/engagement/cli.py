"""Command-line entry point: ``engagement {solve,verify,sweep,simulate,report} CONFIG``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from engagement import __version__
from engagement.config import ConfigError, RunConfig, load_config
from engagement.model import InvalidParameters, ModelParams
from engagement.oracle import GridSpec, NotConverged, backward_solve, extract_policy, fixed_point_solve
from engagement.simulator import NetworkSpec, export_trace, simulate_ensemble
from engagement.solver import SolveResult, solve_threshold, value_arrays
from engagement.stackelberg import geometric_grid, sweep, v_bar

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFY_FAILED = 2
EXIT_RUNTIME = 3

VERIFY_REL_TOL = 1e-8

log = logging.getLogger("engagement")


class VerificationFailed(RuntimeError):
    pass


def _g(x: float) -> str:
    return f"{x:.9g}"


def header_line(params: ModelParams) -> str:
    items = " ".join(f"{k}={v!r}" for k, v in params.as_dict().items())
    return f"engagement {__version__} {items}"


def _write_csv(path: Path, params: ModelParams, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {header_line(params)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _json_ready(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _write_json(path: Path, params: ModelParams, payload: dict) -> None:
    body = {"_header": header_line(params), **_json_ready(payload)}
    path.write_text(json.dumps(body, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def solve_summary(solve: SolveResult) -> dict:
    return {
        "omega": solve.omega,
        "k_omega": solve.k_omega,
        "trivial": solve.trivial,
        "grazing": solve.grazing,
    }


def run_solve(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params
    solve = solve_threshold(params)
    u = np.linspace(0.0, params.u0, cfg.solve.u_points)
    v_h, v_n = value_arrays(u, solve)
    policy_h = u / params.v
    policy_n = np.where(solve.trivial | (u < solve.omega), 0.0, params.t_a_bar)
    _write_csv(
        out / "value_function.csv",
        params,
        ("u", "v_h", "v_n", "policy_h", "policy_n"),
        ([_g(a), _g(b), _g(c), _g(d), _g(e)] for a, b, c, d, e in zip(u, v_h, v_n, policy_h, policy_n)),
    )
    summary = solve_summary(solve)
    print(f"omega={_g(solve.omega)} k_omega={solve.k_omega} trivial={str(solve.trivial).lower()}")
    return summary


def run_verify(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params
    solve = solve_threshold(params)
    grid = GridSpec(cfg.oracle.m_per_delta)
    gv = backward_solve(params, grid)
    v_h, v_n = value_arrays(gv.u, solve)
    err_backward = float(max(np.max(np.abs(gv.v_h - v_h)), np.max(np.abs(gv.v_n - v_n))))
    fp = fixed_point_solve(params, grid, cfg.oracle.tol, cfg.oracle.max_iter)
    err_oracles = float(max(np.max(np.abs(fp.v_h - gv.v_h)), np.max(np.abs(fp.v_n - gv.v_n))))
    table = extract_policy(gv, params)
    limit = VERIFY_REL_TOL * max(params.u0, 1e-300)
    ok = err_backward <= limit and err_oracles <= 10 * cfg.oracle.tol
    bracket = None
    if not solve.trivial and solve.omega <= gv.u[-1]:
        bracket = abs(table.omega_hat - solve.omega)
        ok = ok and bracket <= gv.h * (1 + 1e-9)
    report = {
        "max_abs_discrepancy": err_backward,
        "tolerance": limit,
        "oracle_agreement": err_oracles,
        "value_iterations": fp.iterations,
        "omega": solve.omega,
        "omega_hat": table.omega_hat,
        "omega_bracket_error": bracket,
        "grid_step": gv.h,
        "passed": ok,
    }
    print(f"max_abs_discrepancy={err_backward:.3e} tolerance={limit:.3e} "
          f"oracle_agreement={err_oracles:.3e} passed={str(ok).lower()}")
    _write_json(out / "verify.json", params, report)
    if not ok:
        raise VerificationFailed(f"closed form disagrees with oracle by {err_backward:.3e}")
    return report


def run_sweep(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params
    grid = geometric_grid(cfg.sweep.t_min, cfg.sweep.t_max, cfg.sweep.points_per_decade)
    result = sweep(params, grid, workers=cfg.sweep.workers)
    _write_csv(
        out / "sweep.csv",
        params,
        ("t_a", "v_bar", "regime"),
        ([_g(t), _g(v), r] for t, v, r in zip(result.t_a, result.v_bar, result.regimes)),
    )
    summary = result.summary()
    _write_json(out / "sweep_summary.json", params, summary)
    print(json.dumps(_json_ready(summary), indent=2))
    if result.bound_violation:
        print("FINDING: sampled value fell below the worst-case bound beyond the envelope allowance")
    return summary


def run_simulate(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params
    sim = cfg.simulate
    solve = solve_threshold(params)
    net = NetworkSpec(sim.num_nodes, sim.num_honeypots)
    ens = simulate_ensemble(params, solve, net, sim.num_traces, sim.seed)
    header = [header_line(params)]
    for k, trace in enumerate(ens.traces):
        (out / f"trace_{k}.csv").write_text(export_trace(trace, header), encoding="utf-8")
    summary = ens.summary()
    summary["v_bar"] = v_bar(params.t_a_bar, params)
    summary["seed"] = sim.seed
    _write_csv(
        out / "ensemble.csv",
        params,
        ("statistic", "value"),
        ([k, "" if v is None else (_g(v) if isinstance(v, float) else str(v))] for k, v in summary.items()),
    )
    print(json.dumps(_json_ready(summary), indent=2))
    return summary


def run_report(cfg: RunConfig, out: Path) -> dict:
    combined = {
        "solve": run_solve(cfg, out),
        "verify": run_verify(cfg, out),
        "sweep": run_sweep(cfg, out),
        "simulate": run_simulate(cfg, out),
    }
    sw = combined["sweep"]
    combined["headline"] = {
        "omega": combined["solve"]["omega"],
        "k_omega": combined["solve"]["k_omega"],
        "trivial": combined["solve"]["trivial"],
        "limit_low": sw["limit_low"],
        "value_high": sw["value_high"],
        "worst_case_bound": sw["worst_case_bound"],
        "stackelberg_argmin_t_a": sw["argmin_t_a"],
        "stackelberg_min_v_bar": sw["min_v_bar"],
    }
    _write_json(out / "report.json", cfg.params, combined)
    # echo the fully resolved config so the run can be repeated exactly
    echo = cfg.to_dict()
    echo["output_dir"] = cfg.output_dir
    (out / "config.json").write_text(json.dumps(echo, indent=2) + "\n", encoding="utf-8")
    return combined


COMMANDS = {
    "solve": run_solve,
    "verify": run_verify,
    "sweep": run_sweep,
    "simulate": run_simulate,
    "report": run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engagement",
        description="Optimal attacker-engagement timing: solve, verify, sweep and simulate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "closed-form threshold, value function and policy"),
        ("verify", "compare the closed form against the grid oracles"),
        ("sweep", "defender value as the attacker varies its move period"),
        ("simulate", "replay attacks under the optimal policy"),
        ("report", "run everything and write a combined summary"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="JSON run configuration")
        cmd.add_argument("-o", "--output-dir", help="override output_dir from the config")
        if name in ("simulate", "report"):
            cmd.add_argument("--num-traces", type=int)
            cmd.add_argument("--seed", type=int)
            cmd.add_argument("--num-nodes", type=int)
            cmd.add_argument("--num-honeypots", type=int)
        if name in ("sweep", "report"):
            cmd.add_argument("--workers", type=int, help="threads used to evaluate sweep points")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    sim = {
        key: getattr(args, key)
        for key in ("num_traces", "seed", "num_nodes", "num_honeypots")
        if getattr(args, key, None) is not None
    }
    if sim:
        if sim.get("num_traces", 1) < 1:
            raise ConfigError("simulate.num_traces", "must be >= 1")
        cfg = replace(cfg, simulate=replace(cfg.simulate, **sim))
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, sweep=replace(cfg.sweep, workers=args.workers))
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        NetworkSpec(cfg.simulate.num_nodes, cfg.simulate.num_honeypots)
    except (ConfigError, InvalidParameters, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except (NotConverged, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
