"""Command-line front end: solve, sweeps, oracle comparison, property suites.

Exit codes: 0 success, 2 infeasible scenario, 1 usage or config errors.
All randomness flows from --seed; sweep trials use seed + trial index.
Outputs are byte-identical for identical argv + config + seed once the
timestamp in generated filenames is pinned with --tag.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .scenario import ConfigError, ScenarioConfig, generate_channels
from .model import (
    CoefficientBundle,
    proposition1_inequality,
    sum_relaxed_rate,
)
from .fp_solver import Infeasible, SolverSettings, q_value, solve, update_y
from .oracle import BudgetExceeded, OracleSettings, brute_force, random_toy_instance
from .experiments import SweepSpec, no_radar_baseline, run_sweep, write_sweep_csv

__all__ = ["main", "run"]

DEFAULT_SWEEP_VALUES = {
    "mu": "12,16,20,24,28",
    "pc_max": "40,42,44,46,48,50",
    "pr_cap": "20,22,24,26,28,30",
    "pc_cap": "20,22,24,26,28,30",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract reserves 2 for infeasible
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rcc-alloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, jobs=False):
        p.add_argument("--config", type=Path, default=None,
                       help="scenario YAML file (defaults used when omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        if jobs:
            p.add_argument("--jobs", type=int, default=None,
                           help="worker processes (env RCC_ALLOC_JOBS, then 1)")

    p_solve = sub.add_parser("solve", help="solve one scenario, write result + trace")
    common(p_solve)
    p_solve.add_argument("--out-dir", type=Path, default=Path("."))
    p_solve.add_argument("--tag", default=None,
                         help="filename tag replacing the UTC timestamp")

    p_sweep = sub.add_parser("sweep", help="run a seeded parameter sweep to CSV")
    common(p_sweep, jobs=True)
    p_sweep.add_argument("--kind", required=True, choices=sorted(DEFAULT_SWEEP_VALUES))
    p_sweep.add_argument("--values", default=None,
                         help="comma-separated dB/dBm values, strictly increasing")
    p_sweep.add_argument("--trials", type=int, default=20)
    p_sweep.add_argument("--baseline", action="store_true",
                         help="also write the radar-free reference sweep")
    p_sweep.add_argument("--out-dir", type=Path, default=Path("."))
    p_sweep.add_argument("--tag", default=None)

    p_oracle = sub.add_parser("oracle-check",
                              help="compare the solver against exhaustive search")
    p_oracle.add_argument("--n", type=int, default=3)
    p_oracle.add_argument("--k", type=int, default=2)
    p_oracle.add_argument("--instances", type=int, default=20)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--levels", type=int, default=9)
    p_oracle.add_argument("--jobs", type=int, default=None)

    p_prop = sub.add_parser("prop-check",
                            help="sample the splitting bound and surrogate tightness")
    p_prop.add_argument("--samples", type=int, default=100000)
    p_prop.add_argument("--seed", type=int, default=0)

    p_trace = sub.add_parser("trace", help="write one solve's convergence trace CSV")
    common(p_trace)
    p_trace.add_argument("--out", type=Path, default=None,
                         help="output path (stdout when omitted)")

    return parser


def _load_config(args) -> ScenarioConfig:
    config = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace
        config = replace(config, seed=args.seed)
    return config


def _resolve_jobs(args) -> int:
    jobs = getattr(args, "jobs", None)
    if jobs is None:
        jobs = int(os.environ.get("RCC_ALLOC_JOBS", "1"))
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return jobs


def _stamp(tag) -> str:
    return tag if tag else datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def _cmd_solve(args) -> int:
    config = _load_config(args)
    channels = generate_channels(config)
    result = solve(channels, config)

    stamp = _stamp(args.tag)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    result_path = args.out_dir / f"solve_{stamp}.json"
    trace_path = args.out_dir / f"trace_{stamp}.csv"

    payload = {
        "n_subcarriers": config.n_subcarriers,
        "n_users": config.n_users,
        "seed": config.seed,
        "relaxed_sum_rate_bpcu": result.relaxed_sum_rate,
        "binary_sum_rate_bpcu": result.binary_sum_rate,
        "sinr_db": result.achieved_sinr_db,
        "sinr_floor_db": config.sinr_floor_db,
        "feasible": result.feasible,
        "outer_iterations": result.outer_iterations,
        "owner": result.assignment.owner.tolist(),
        "comm_power_w": result.assignment.comm_power.tolist(),
        "radar_power_w": result.assignment.radar_power.tolist(),
    }
    result_path.write_text(json.dumps(payload, indent=2) + "\n")
    trace_path.write_text(result.trace_csv())

    print(f"subcarriers: {config.n_subcarriers}  users: {config.n_users}  seed: {config.seed}")
    print(f"relaxed sum rate: {result.relaxed_sum_rate!r} bpcu")
    print(f"binary sum rate: {result.binary_sum_rate!r} bpcu")
    print(f"radar sinr: {result.achieved_sinr_db!r} dB (floor {config.sinr_floor_db!r} dB)")
    print(f"feasible: {'true' if result.feasible else 'false'}")
    print(f"outer iterations: {result.outer_iterations}")
    print(f"result: {result_path}")
    print(f"trace: {trace_path}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    jobs = _resolve_jobs(args)
    raw = args.values if args.values is not None else DEFAULT_SWEEP_VALUES[args.kind]
    values = [float(v) for v in raw.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("--values must list at least one value")
    seed_base = args.seed if args.seed is not None else config.seed
    spec = SweepSpec(sweep_kind=args.kind, values=tuple(values),
                     trials=args.trials, base=config, seed_base=seed_base)

    rows = run_sweep(spec, jobs=jobs)
    path = write_sweep_csv(rows, args.out_dir, args.kind, tag=args.tag)
    print(f"sweep: {path} ({len(rows)} rows)")
    if args.baseline:
        base_rows = no_radar_baseline(spec, jobs=jobs)
        base_path = write_sweep_csv(base_rows, args.out_dir, args.kind,
                                    tag=args.tag, baseline=True)
        print(f"baseline: {base_path} ({len(base_rows)} rows)")
    return 0


def _cmd_oracle_check(args) -> int:
    jobs = _resolve_jobs(args)
    oracle_settings = OracleSettings(grid_levels=args.levels, jobs=jobs)
    ratios = []
    for i in range(args.instances):
        config, channels = random_toy_instance(args.n, args.k, seed=args.seed + i)
        try:
            result = solve(channels, config)
        except Infeasible:
            try:
                brute_force(channels, config, oracle_settings)
            except Infeasible:
                print(f"instance {i}: infeasible (consistent)")
                continue
            print(f"instance {i}: solver infeasible but oracle found a point")
            ratios.append(0.0)
            continue
        oracle_rate, _ = brute_force(channels, config, oracle_settings)
        ratio = result.binary_sum_rate / oracle_rate if oracle_rate > 0.0 else 1.0
        ratios.append(ratio)
        print(f"instance {i}: solver={result.binary_sum_rate!r} "
              f"oracle={oracle_rate!r} ratio={ratio!r}")
    if ratios:
        worst = min(ratios)
        frac = sum(r >= 0.98 for r in ratios) / len(ratios)
        print(f"min ratio: {worst!r}")
        print(f"fraction >= 0.98: {frac!r}")
    return 0


def _cmd_prop_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = math.inf
    for _ in range(args.samples):
        pair = np.sort(10.0 ** rng.uniform(-4.0, 4.0, 2))
        total = float(10.0 ** rng.uniform(-4.0, 4.0))
        delta = float(rng.uniform(0.0, 1.0) * total)
        # half at the guarantee boundary, half strictly inside
        eta = 0.5 if rng.uniform() < 0.5 else float(rng.uniform(0.5, 2.0))
        lhs, rhs = proposition1_inequality(float(pair[0]), float(pair[1]),
                                           total, delta, eta)
        worst = min(worst, lhs - rhs)
    ok_prop = worst >= -1e-12
    print(f"splitting bound: min margin {worst!r} over {args.samples} samples "
          f"[{'pass' if ok_prop else 'FAIL'}]")

    config = ScenarioConfig(n_subcarriers=16, n_users=4, seed=args.seed + 1)
    channels = generate_channels(config)
    coeffs = CoefficientBundle.from_channels(channels, config)
    gap = 0.0
    for _ in range(100):
        p = rng.uniform(0.0, config.p_c_cap_w, (config.n_users + 1, config.n_subcarriers))
        aux = update_y(p, coeffs, config.eta)
        q = q_value(p, aux, coeffs, config.eta)
        rate = sum_relaxed_rate(p, coeffs, config.eta)
        gap = max(gap, abs(q - rate))
    ok_tight = gap <= 1e-9
    print(f"surrogate tightness: max |gap| {gap!r} over 100 points "
          f"[{'pass' if ok_tight else 'FAIL'}]")
    return 0 if (ok_prop and ok_tight) else 1


def _cmd_trace(args) -> int:
    config = _load_config(args)
    channels = generate_channels(config)
    result = solve(channels, config)
    text = result.trace_csv()
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(f"trace: {args.out}")
    return 0


_DISPATCH = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "oracle-check": _cmd_oracle_check,
    "prop-check": _cmd_prop_check,
    "trace": _cmd_trace,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"oracle budget: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run(None))
