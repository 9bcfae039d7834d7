"""Brute-force ground truth for tiny instances.

Enumerates every subcarrier-ownership pattern and grid-searches the comm and
radar powers on uniform levels, keeping only combinations that satisfy the
power budgets and the radar-SINR floor. Exponential in every dimension; a
hard evaluation guard refuses anything beyond toy sizes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import LOG2, NO_OWNER, Assignment, CoefficientBundle
from .scenario import ChannelSet, ScenarioConfig, generate_channels
from .fp_solver import Infeasible


class BudgetExceeded(Exception):
    """The requested enumeration is larger than the evaluation guard allows."""

    def __init__(self, required: float, allowed: float):
        self.required = required
        self.allowed = allowed
        super().__init__(
            f"enumeration needs ~{required:.3g} evaluations, guard allows {allowed:.3g}"
        )


@dataclass(frozen=True)
class OracleSettings:
    grid_levels: int = 9
    max_evaluations: float = 5e7
    jobs: int = 1

    def __post_init__(self):
        if self.grid_levels < 2:
            raise ValueError("grid_levels must be at least 2")
        if self.max_evaluations <= 0:
            raise ValueError("max_evaluations must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


def _owner_patterns(n: int, k: int):
    # all (K+1)^N ownership vectors, NO_OWNER encoded as -1
    total = (k + 1) ** n
    for code in range(total):
        pattern = np.empty(n, dtype=int)
        c = code
        for i in range(n):
            pattern[i] = c % (k + 1) - 1
            c //= k + 1
        yield pattern


def _cross(acc: np.ndarray, new: np.ndarray) -> np.ndarray:
    return np.add.outer(acc, new).ravel()


def _best_for_pattern(pattern, grid_c, grid_r, coeffs, mu, comm_budget, radar_budget):
    """Exhaustive power grid for one ownership pattern.

    Returns (rate, comm_levels, radar_levels, best_sinr_ratio) where the level
    arrays are per-subcarrier grid indices of the best feasible combo, or
    rate = -inf when nothing on the grid is feasible.
    """
    n = pattern.shape[0]
    per_sub = []
    for i in range(n):
        own = pattern[i]
        c = grid_c if own >= 0 else grid_c[:1]
        r = grid_r
        cc = np.repeat(c, r.size)
        rr = np.tile(r, c.size)
        if own >= 0:
            rate = np.log1p(coeffs.alpha[i, own] * cc / (coeffs.beta[i, own] * rr + 1.0)) / LOG2
        else:
            rate = np.zeros(cc.size)
        per_sub.append((cc, rr, rate,
                        coeffs.xi[i] * rr, coeffs.gamma[i] * cc))

    w_sum, r_sum, rate_sum, num_sum, den_sum = per_sub[0]
    w_sum = w_sum.copy()
    for cc, rr, rate, num, den in per_sub[1:]:
        w_sum = _cross(w_sum, cc)
        r_sum = _cross(r_sum, rr)
        rate_sum = _cross(rate_sum, rate)
        num_sum = _cross(num_sum, num)
        den_sum = _cross(den_sum, den)

    sinr = num_sum / (den_sum + n)
    best_sinr = float(sinr.max())
    ok = (w_sum <= comm_budget) & (r_sum <= radar_budget)
    if mu > 0.0:
        ok &= num_sum >= mu * (den_sum + n)
    if not ok.any():
        return -math.inf, None, None, best_sinr

    masked = np.where(ok, rate_sum, -math.inf)
    flat = int(np.argmax(masked))
    best_rate = float(masked[flat])
    # unravel the combo index back into per-subcarrier grid choices
    sizes = [p[0].size for p in per_sub]
    idxs = []
    for size in reversed(sizes):
        idxs.append(flat % size)
        flat //= size
    idxs.reverse()
    comm_levels = np.array([per_sub[i][0][idxs[i]] for i in range(n)])
    radar_levels = np.array([per_sub[i][1][idxs[i]] for i in range(n)])
    return best_rate, comm_levels, radar_levels, best_sinr


def brute_force(channels: ChannelSet, config: ScenarioConfig,
                settings: OracleSettings | None = None):
    """Global optimum of the binary problem on a uniform power grid.

    Returns (best_rate, Assignment). Raises BudgetExceeded when the instance
    is too large for the guard and Infeasible when no grid point meets the
    SINR floor.
    """
    settings = settings or OracleSettings()
    coeffs = CoefficientBundle.from_channels(channels, config)
    n, k = coeffs.n_subcarriers, coeffs.n_users
    levels = settings.grid_levels

    required = (k + 1) ** n * float(levels) ** (2 * n)
    if required > settings.max_evaluations:
        raise BudgetExceeded(required, settings.max_evaluations)

    grid_c = config.p_c_cap_w * np.arange(levels) / (levels - 1)
    grid_r = config.p_r_cap_w * np.arange(levels) / (levels - 1)
    mu = config.sinr_floor_linear
    args = (grid_c, grid_r, coeffs, mu, config.p_c_max_w, config.p_r_max_w)

    patterns = list(_owner_patterns(n, k))
    if settings.jobs > 1:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            results = list(pool.map(lambda pt: _best_for_pattern(pt, *args), patterns))
    else:
        results = [_best_for_pattern(pt, *args) for pt in patterns]

    best_rate = -math.inf
    best = None
    max_sinr = 0.0
    for pattern, (rate, comm, radar, sinr) in zip(patterns, results):
        max_sinr = max(max_sinr, sinr)
        if rate > best_rate:
            best_rate = rate
            best = (pattern, comm, radar)
    if best is None or not math.isfinite(best_rate):
        raise Infeasible(max_sinr, mu)

    pattern, comm, radar = best
    assignment = Assignment(
        owner=pattern,
        comm_power=comm,
        radar_power=radar,
        dominance=np.zeros(n),
    )
    return best_rate, assignment


def toy_config(n: int = 3, k: int = 2, seed: int = 0, **overrides) -> ScenarioConfig:
    """Small-instance scenario sized so the enumeration guard passes.

    Shrinks the cell and the budgets so a handful of subcarriers still
    operate in a regime where both budgets and the SINR floor can bind.
    """
    base = dict(
        n_subcarriers=n,
        n_users=k,
        cell_radius_m=300.0,
        p_c_max_dbm=33.0,
        p_r_max_dbm=33.0,
        p_c_cap_dbm=30.0,
        p_r_cap_dbm=30.0,
        sinr_floor_db=10.0,
        seed=seed,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def random_toy_instance(n: int, k: int, seed: int, **overrides):
    """Convenience: toy config plus its channel draw."""
    config = toy_config(n, k, seed, **overrides)
    return config, generate_channels(config)
