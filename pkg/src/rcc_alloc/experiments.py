"""Seeded sweep harness persisting solver results as CSV tables.

Each sweep varies one scenario knob over a list of dB/dBm values while the
channel draw is held fixed per trial. Within a trial, values are solved as a
continuation: the order follows the direction in which the feasible set can
only grow (descending SINR floor, ascending budgets/caps), the previous
solution warm-starts the next solve, and the better of {fresh solve, carried
incumbent} is reported. Both candidates are genuinely feasible for the value
they are reported at, and the per-trial curves then inherit the monotonicity
the nested feasible sets guarantee mathematically.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .scenario import ScenarioConfig, generate_channels
from .fp_solver import (
    Constraints,
    Infeasible,
    SolverSettings,
    max_radar_sinr,
    solve,
)
from .model import CoefficientBundle

__all__ = [
    "SWEEP_FIELDS",
    "CSV_HEADER",
    "SweepRow",
    "SweepSpec",
    "run_sweep",
    "no_radar_baseline",
    "rows_to_csv",
    "write_sweep_csv",
    "sweep_filename",
]

# which config field each sweep kind replaces, and the continuation direction
SWEEP_FIELDS = {
    "mu": ("sinr_floor_db", "descending"),
    "pc_max": ("p_c_max_dbm", "ascending"),
    "pr_cap": ("p_r_cap_dbm", "ascending"),
    "pc_cap": ("p_c_cap_dbm", "ascending"),
}

CSV_HEADER = "sweep_kind,value_db,trial,sum_rate_bpcu,sinr_db,feasible,iterations"


@dataclass(frozen=True)
class SweepRow:
    sweep_kind: str
    value_db: float
    trial: int
    sum_rate_bpcu: float
    sinr_db: float
    feasible: bool
    iterations: int

    def csv_line(self) -> str:
        return (
            f"{self.sweep_kind},{self.value_db!r},{self.trial},"
            f"{self.sum_rate_bpcu!r},{self.sinr_db!r},"
            f"{'true' if self.feasible else 'false'},{self.iterations}"
        )


@dataclass(frozen=True)
class SweepSpec:
    sweep_kind: str
    values: tuple
    trials: int
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    seed_base: int = 0

    def __post_init__(self):
        if self.sweep_kind not in SWEEP_FIELDS:
            raise ValueError(f"unknown sweep kind {self.sweep_kind!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "values", values)

    def config_for(self, value: float, trial: int) -> ScenarioConfig:
        name, _ = SWEEP_FIELDS[self.sweep_kind]
        return replace(self.base, seed=self.seed_base + trial, **{name: value})


def _solve_order(spec: SweepSpec):
    _, direction = SWEEP_FIELDS[spec.sweep_kind]
    order = list(spec.values)
    if direction == "descending":
        order.reverse()
    return order


def _radar_only_sinr_db(channels, config) -> float:
    coeffs = CoefficientBundle.from_channels(channels, config)
    cons = Constraints.from_config(coeffs, config, radar_floor=False)
    best, _ = max_radar_sinr(coeffs, cons)
    return 10.0 * math.log10(max(best, 1e-300))


def _run_trial(spec: SweepSpec, trial: int, settings, baseline: bool):
    """One trial's full continuation pass; returns {value: SweepRow}."""
    base_cfg = replace(spec.base, seed=spec.seed_base + trial)
    channels = generate_channels(base_cfg)
    if baseline:
        channels = channels.without_radar_interference()
    radar_floor = not baseline

    rows = {}
    carried = None  # (power entries, binary rate, sinr_db) of the incumbent
    for value in _solve_order(spec):
        config = spec.config_for(value, trial)
        init = carried[0] if carried is not None else None
        try:
            result = solve(channels, config, settings,
                           radar_floor=radar_floor, init_power=init)
        except Infeasible:
            rows[value] = SweepRow(
                sweep_kind=spec.sweep_kind,
                value_db=value,
                trial=trial,
                sum_rate_bpcu=0.0,
                sinr_db=_radar_only_sinr_db(channels, config),
                feasible=False,
                iterations=0,
            )
            carried = None
            continue

        candidate = (result.power.entries, result.binary_sum_rate,
                     result.achieved_sinr_db)
        feasible = result.feasible
        if carried is not None and carried[1] > candidate[1]:
            # the previous value's allocation stays feasible (the feasible
            # set only grew) and scores higher; keep the incumbent
            candidate = carried
            feasible = True
        carried = candidate
        rows[value] = SweepRow(
            sweep_kind=spec.sweep_kind,
            value_db=value,
            trial=trial,
            sum_rate_bpcu=candidate[1],
            sinr_db=candidate[2],
            feasible=feasible,
            iterations=result.outer_iterations,
        )
    return rows


def _constant_across_values(spec: SweepSpec, baseline: bool) -> bool:
    # without the radar term the objective and polytope ignore mu and the
    # radar cap entirely, so one solve per trial covers the whole value list
    return baseline and spec.sweep_kind in ("mu", "pr_cap")


def _run_trial_constant(spec: SweepSpec, trial: int, settings):
    base_cfg = replace(spec.base, seed=spec.seed_base + trial)
    channels = generate_channels(base_cfg).without_radar_interference()
    config = spec.config_for(spec.values[0], trial)
    result = solve(channels, config, settings, radar_floor=False)
    return {
        value: SweepRow(
            sweep_kind=spec.sweep_kind,
            value_db=value,
            trial=trial,
            sum_rate_bpcu=result.binary_sum_rate,
            sinr_db=result.achieved_sinr_db,
            feasible=result.feasible,
            iterations=result.outer_iterations,
        )
        for value in spec.values
    }


def _trial_worker(args):
    spec, trial, settings, baseline = args
    if _constant_across_values(spec, baseline):
        return trial, _run_trial_constant(spec, trial, settings)
    return trial, _run_trial(spec, trial, settings, baseline)


def _collect(spec: SweepSpec, settings, baseline: bool, jobs: int):
    tasks = [(spec, trial, settings, baseline) for trial in range(spec.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            by_trial = dict(pool.map(_trial_worker, tasks))
    else:
        by_trial = dict(map(_trial_worker, tasks))
    # value-major, trial-minor regardless of completion order
    return [
        by_trial[trial][value]
        for value in spec.values
        for trial in range(spec.trials)
    ]


def run_sweep(spec: SweepSpec, settings: SolverSettings | None = None,
              jobs: int = 1):
    """Solve the coexistence problem over the sweep grid; returns rows."""
    return _collect(spec, settings, baseline=False, jobs=jobs)


def no_radar_baseline(spec: SweepSpec, settings: SolverSettings | None = None,
                      jobs: int = 1):
    """Same sweep with the radar interference zeroed and no SINR floor."""
    return _collect(spec, settings, baseline=True, jobs=jobs)


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    lines.extend(row.csv_line() for row in rows)
    return "\n".join(lines) + "\n"


def sweep_filename(kind: str, tag: str | None = None, baseline: bool = False) -> str:
    stamp = tag if tag else datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    suffix = "_baseline" if baseline else ""
    return f"{kind}{suffix}_{stamp}.csv"


def write_sweep_csv(rows, out_dir, kind: str, tag: str | None = None,
                    baseline: bool = False) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / sweep_filename(kind, tag, baseline)
    path.write_text(rows_to_csv(rows))
    return path
