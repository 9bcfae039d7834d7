"""Objective and constraint quantities for the shared-spectrum allocation.

The binary formulation assigns each subcarrier to at most one user and splits
power between the BS and the radar. The relaxed formulation replaces the
assignment-times-power products by a comm power matrix w[n, k] >= 0 and charges
intra-subcarrier multiuser interference with weight eta in each user's SINR
denominator; with eta >= 1/2 the relaxed optimum is single-user per subcarrier,
so both formulations share their optima.

Normalized coefficients (noise divided out):

    alpha[n, k] = h2[n, k] / noise_comm      desired-signal gain
    beta[n, k]  = s2[n, k] / noise_comm      radar-into-user gain
    xi[n]       = g2[n] / noise_radar        radar round-trip gain
    gamma[n]    = u2[n] / noise_radar        comm-into-radar gain
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ChannelSet, ScenarioConfig

__all__ = [
    "PowerMatrix",
    "Assignment",
    "CoefficientBundle",
    "relaxed_rate",
    "rates_per_user",
    "sum_relaxed_rate",
    "binary_rate",
    "radar_sinr",
    "extract_assignment",
    "proposition1_inequality",
]

LOG2 = np.log(2.0)

NO_OWNER = -1  # owner value for subcarriers carrying no comm power


@dataclass(frozen=True)
class PowerMatrix:
    """(K+1) x N stacked decision variables: K comm rows, radar row last."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] < 2:
            raise ValueError("PowerMatrix needs shape (K+1, N) with K >= 1")
        if not np.all(np.isfinite(e)) or np.any(e < 0.0):
            raise ValueError("powers must be finite and non-negative")
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_parts(cls, comm: np.ndarray, radar: np.ndarray) -> "PowerMatrix":
        return cls(np.vstack([comm, radar[None, :]]))

    @property
    def n_users(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def n_subcarriers(self) -> int:
        return self.entries.shape[1]

    @property
    def comm(self) -> np.ndarray:
        """K x N comm powers w[k, n]."""
        return self.entries[:-1, :]

    @property
    def radar(self) -> np.ndarray:
        """N radar powers."""
        return self.entries[-1, :]


@dataclass(frozen=True)
class Assignment:
    """Binary solution: per-subcarrier owner (or NO_OWNER) plus powers.

    dominance[n] = second-largest / largest comm power in column n before
    extraction (0 when at most one user was active); purely diagnostic.
    """

    owner: np.ndarray
    comm_power: np.ndarray
    radar_power: np.ndarray
    dominance: np.ndarray

    def __post_init__(self):
        n = self.owner.shape[0]
        if self.comm_power.shape != (n,) or self.radar_power.shape != (n,):
            raise ValueError("inconsistent assignment array lengths")
        if np.any(self.comm_power < 0.0) or np.any(self.radar_power < 0.0):
            raise ValueError("assignment powers must be non-negative")
        if np.any((self.owner == NO_OWNER) & (self.comm_power != 0.0)):
            raise ValueError("unowned subcarriers must carry zero comm power")


@dataclass(frozen=True)
class CoefficientBundle:
    """Noise-normalized channel coefficients plus the penalty convention."""

    alpha: np.ndarray   # (N, K)
    beta: np.ndarray    # (N, K)
    xi: np.ndarray      # (N,)
    gamma: np.ndarray   # (N,)
    own_gain: bool = True  # interference weighted by receiver's own alpha

    def __post_init__(self):
        n, k = self.alpha.shape
        if self.beta.shape != (n, k) or self.xi.shape != (n,) or self.gamma.shape != (n,):
            raise ValueError("inconsistent coefficient shapes")
        for name in ("alpha", "beta", "xi", "gamma"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
                raise ValueError(f"{name} must be finite and non-negative")

    @classmethod
    def from_channels(cls, channels: ChannelSet, config: ScenarioConfig) -> "CoefficientBundle":
        return cls(
            alpha=channels.h2 / config.noise_comm_w,
            beta=channels.s2 / config.noise_comm_w,
            xi=channels.g2 / config.noise_radar_w,
            gamma=channels.u2 / config.noise_radar_w,
            own_gain=config.penalty_own_gain,
        )

    @property
    def n_subcarriers(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_users(self) -> int:
        return self.alpha.shape[1]


def _entries(power) -> np.ndarray:
    if isinstance(power, PowerMatrix):
        return power.entries
    return np.asarray(power, dtype=float)


def interference_matrix(comm: np.ndarray, coeffs: CoefficientBundle) -> np.ndarray:
    """(K, N) weighted cross power seen by each user on each subcarrier.

    own_gain:  I[k, n] = alpha[n, k] * sum_{i != k} w[i, n]
    otherwise: I[k, n] = sum_{i != k} alpha[n, i] * w[i, n]
    """
    a = coeffs.alpha.T  # (K, N)
    if coeffs.own_gain:
        return a * (comm.sum(axis=0, keepdims=True) - comm)
    weighted = a * comm
    return weighted.sum(axis=0, keepdims=True) - weighted


def _sinr_terms(power, coeffs: CoefficientBundle, eta: float):
    e = _entries(power)
    comm = e[:-1, :]
    radar = e[-1, :]
    a = coeffs.alpha.T
    b = coeffs.beta.T
    den = b * radar[None, :] + eta * interference_matrix(comm, coeffs) + 1.0
    return a * comm, den


def rates_per_user(power, coeffs: CoefficientBundle, eta: float) -> np.ndarray:
    """Relaxed per-user rates in bits per channel use, shape (K,)."""
    num, den = _sinr_terms(power, coeffs, eta)
    return np.log1p(num / den).sum(axis=1) / LOG2


def relaxed_rate(power, coeffs: CoefficientBundle, eta: float, user: int) -> float:
    """Relaxed rate of one user under the eta-weighted interference charge."""
    return float(rates_per_user(power, coeffs, eta)[user])


def sum_relaxed_rate(power, coeffs: CoefficientBundle, eta: float) -> float:
    return float(rates_per_user(power, coeffs, eta).sum())


def radar_sinr(power, coeffs: CoefficientBundle) -> float:
    """Radar SINR: sum_n xi[n] Pr[n] / sum_n (gamma[n] * column comm power + 1)."""
    e = _entries(power)
    comm_total = e[:-1, :].sum(axis=0)
    num = float(coeffs.xi @ e[-1, :])
    den = float(coeffs.gamma @ comm_total) + e.shape[1]
    return num / den


def binary_rate(assignment: Assignment, channels: ChannelSet, config: ScenarioConfig) -> float:
    """Sum rate of a binary solution evaluated on raw gains.

    Each owned subcarrier contributes log2(1 + h2 P / (s2 Pr + noise)); there
    is no multiuser term because ownership is exclusive.
    """
    owned = assignment.owner != NO_OWNER
    if not np.any(owned):
        return 0.0
    idx = np.nonzero(owned)[0]
    users = assignment.owner[idx]
    sig = channels.h2[idx, users] * assignment.comm_power[idx]
    noise = channels.s2[idx, users] * assignment.radar_power[idx] + config.noise_comm_w
    return float(np.log1p(sig / noise).sum() / LOG2)


def extract_assignment(power, p_c_cap_w: float, dominance_tol: float = 1e-6) -> Assignment:
    """Round a relaxed power matrix to an exclusive per-subcarrier assignment.

    The owner of a subcarrier is the comm row with the largest entry; the
    column's total comm power moves to that owner (capped). dominance_tol only
    flags how sharp the rounding was, it does not change the result.
    """
    e = _entries(power)
    comm = e[:-1, :]
    owner = comm.argmax(axis=0)
    col_max = comm.max(axis=0)
    owner = np.where(col_max > 0.0, owner, NO_OWNER)
    comm_power = np.minimum(comm.sum(axis=0), p_c_cap_w)
    comm_power = np.where(owner == NO_OWNER, 0.0, comm_power)

    second = np.partition(comm, -2, axis=0)[-2, :] if comm.shape[0] >= 2 else np.zeros_like(col_max)
    with np.errstate(invalid="ignore", divide="ignore"):
        dominance = np.where(col_max > 0.0, second / np.maximum(col_max, 1e-300), 0.0)
    del dominance_tol  # reported via `dominance`; kept for call-site clarity
    return Assignment(
        owner=owner,
        comm_power=comm_power,
        radar_power=e[-1, :].copy(),
        dominance=dominance,
    )


def proposition1_inequality(zeta1: float, zeta2: float, total: float, delta: float,
                            eta: float) -> tuple[float, float]:
    """Single-subcarrier splitting bound behind the eta >= 1/2 guarantee.

    Returns (lhs, rhs) where
        lhs = log2(1 + total / zeta1)
        rhs = log2(1 + (total - delta) / (zeta1 + eta * delta))
            + log2(1 + delta / (zeta2 + eta * (total - delta)))
    i.e. the rate of giving all power `total` to the better-conditioned user
    versus splitting `delta` off to the worse one under the penalty charge.
    lhs >= rhs for every 0 <= delta <= total whenever eta >= 1/2.
    """
    if not (0.0 < zeta1 <= zeta2):
        raise ValueError("need 0 < zeta1 <= zeta2")
    if not (0.0 <= delta <= total):
        raise ValueError("need 0 <= delta <= total")
    lhs = np.log1p(total / zeta1) / LOG2
    rhs = (
        np.log1p((total - delta) / (zeta1 + eta * delta)) / LOG2
        + np.log1p(delta / (zeta2 + eta * (total - delta))) / LOG2
    )
    return float(lhs), float(rhs)
