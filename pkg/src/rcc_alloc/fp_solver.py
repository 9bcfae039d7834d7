"""Alternating fractional-programming solver for the relaxed allocation.

Each user-subcarrier SINR ratio is replaced by its quadratic transform with an
auxiliary variable y[n, k]; for fixed auxiliaries the surrogate objective is
concave in the stacked power matrix and is maximized by projected gradient
ascent over the constraint polytope (per-entry boxes, two budget halfspaces,
one radar-SINR halfspace). Closing the loop with the closed-form auxiliary
update makes the true sum rate monotonically non-decreasing across outer
iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    NO_OWNER,
    Assignment,
    CoefficientBundle,
    PowerMatrix,
    binary_rate,
    extract_assignment,
    interference_matrix,
    radar_sinr,
    sum_relaxed_rate,
)
from .scenario import ChannelSet, ScenarioConfig

__all__ = [
    "AuxiliaryMatrix",
    "SolverSettings",
    "Constraints",
    "SolveResult",
    "Infeasible",
    "ProjectionError",
    "QDomainError",
    "update_y",
    "q_value",
    "q_gradient",
    "project",
    "solve_subproblem",
    "max_radar_sinr",
    "find_feasible",
    "solve",
]

LOG2 = math.log(2.0)


class Infeasible(Exception):
    """No power allocation meets the radar SINR floor."""

    def __init__(self, max_sinr: float, required: float):
        self.max_sinr = max_sinr
        self.required = required
        super().__init__(
            f"radar SINR floor unreachable: best achievable {max_sinr:.6g}, "
            f"required {required:.6g}"
        )


class ProjectionError(RuntimeError):
    """Alternating projections failed to settle within the sweep budget."""

    def __init__(self, change: float, residuals: dict):
        self.change = change
        self.residuals = residuals
        super().__init__(
            f"projection did not converge: last change {change:.3e}, residuals {residuals}"
        )


class QDomainError(ValueError):
    """Surrogate log argument became non-positive for some (n, k) term."""

    def __init__(self, subcarrier: int, user: int, value: float):
        self.subcarrier = subcarrier
        self.user = user
        super().__init__(
            f"non-positive surrogate argument {value:.3e} at subcarrier "
            f"{subcarrier}, user {user}"
        )


@dataclass(frozen=True)
class AuxiliaryMatrix:
    """(N, K) quadratic-transform auxiliaries."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if not np.all(np.isfinite(y)) or np.any(y < 0.0):
            raise ValueError("auxiliaries must be finite and non-negative")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SolverSettings:
    outer_tol: float = 1e-6          # relative sum-rate change across outer iterations
    max_outer_iters: int = 200
    inner_tol: float = 1e-7          # projected-gradient norm threshold
    max_inner_iters: int = 500
    armijo_shrink: float = 0.5       # backtracking factor
    armijo_slope: float = 1e-4       # sufficient-increase constant
    dykstra_max_sweeps: int = 2000
    dykstra_tol: float = 1e-12       # per-sweep change threshold
    sqrt_floor: float = 1e-12        # stabilizes d sqrt(w)/dw at w = 0
    refine: bool = True              # power-only polish on the rounded assignment
    polish_rounds: int = 3           # discrete owner/radar reshuffle passes during refine
    n_starts: int = 3                # deterministic radar-parking starts (best kept)

    def __post_init__(self):
        if min(self.outer_tol, self.inner_tol, self.dykstra_tol, self.sqrt_floor) <= 0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.armijo_shrink < 1.0 and 0.0 < self.armijo_slope < 1.0):
            raise ValueError("invalid line-search constants")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")


@dataclass(frozen=True)
class Constraints:
    """Feasible polytope for the stacked (K+1) x N power matrix.

    upper holds per-entry caps; freezing an entry is expressed as a zero cap
    (used by the refinement pass). mu = 0 disables the radar SINR halfspace.
    """

    upper: np.ndarray
    comm_budget: float
    radar_budget: float
    xi: np.ndarray
    gamma: np.ndarray
    mu: float = 0.0

    def __post_init__(self):
        if self.upper.ndim != 2 or self.upper.shape[0] < 2:
            raise ValueError("upper must be (K+1, N)")
        if np.any(self.upper < 0.0):
            raise ValueError("caps must be non-negative")
        if self.comm_budget < 0.0 or self.radar_budget < 0.0 or self.mu < 0.0:
            raise ValueError("budgets and mu must be non-negative")

    @classmethod
    def from_config(cls, coeffs: CoefficientBundle, config: ScenarioConfig,
                    radar_floor: bool = True) -> "Constraints":
        n, k = coeffs.n_subcarriers, coeffs.n_users
        upper = np.empty((k + 1, n))
        upper[:k, :] = config.p_c_cap_w
        upper[k, :] = config.p_r_cap_w
        return cls(
            upper=upper,
            comm_budget=config.p_c_max_w,
            radar_budget=config.p_r_max_w,
            xi=coeffs.xi,
            gamma=coeffs.gamma,
            mu=config.sinr_floor_linear if radar_floor else 0.0,
        )

    def frozen_to_owner(self, owner: np.ndarray) -> "Constraints":
        """Caps with every off-owner comm entry pinned to zero."""
        upper = self.upper.copy()
        k = upper.shape[0] - 1
        keep = owner[None, :] == np.arange(k)[:, None]
        upper[:k, :] = np.where(keep, upper[:k, :], 0.0)
        return Constraints(upper, self.comm_budget, self.radar_budget,
                           self.xi, self.gamma, self.mu)

    # SINR halfspace in stacked form a . P >= b
    def _sinr_normal(self) -> tuple[np.ndarray, float]:
        k = self.upper.shape[0] - 1
        n = self.upper.shape[1]
        a = np.empty((k + 1, n))
        a[:k, :] = -self.mu * self.gamma[None, :]
        a[k, :] = self.xi
        return a, self.mu * n

    def residuals(self, power) -> dict:
        """Absolute constraint violations (0 when satisfied)."""
        p = power.entries if isinstance(power, PowerMatrix) else np.asarray(power, float)
        out = {
            "box_lower": max(0.0, float(-p.min())),
            "box_upper": max(0.0, float((p - self.upper).max())),
            "comm_budget": max(0.0, float(p[:-1, :].sum() - self.comm_budget)),
            "radar_budget": max(0.0, float(p[-1, :].sum() - self.radar_budget)),
        }
        if self.mu > 0.0:
            a, b = self._sinr_normal()
            out["sinr"] = max(0.0, b - float((a * p).sum()))
        else:
            out["sinr"] = 0.0
        return out

    def relative_violation(self, power) -> float:
        """Worst violation scaled by the size of each constraint."""
        r = self.residuals(power)
        scales = {
            "box_lower": max(1.0, float(self.upper.max())),
            "box_upper": max(1.0, float(self.upper.max())),
            "comm_budget": max(1.0, self.comm_budget),
            "radar_budget": max(1.0, self.radar_budget),
            "sinr": max(1.0, self.mu * self.upper.shape[1]),
        }
        return max(r[name] / scales[name] for name in r)


# ---------------------------------------------------------------------------
# surrogate objective
# ---------------------------------------------------------------------------

def _power_array(power) -> np.ndarray:
    return power.entries if isinstance(power, PowerMatrix) else np.asarray(power, float)


def _aux_array(aux) -> np.ndarray:
    return aux.y if isinstance(aux, AuxiliaryMatrix) else np.asarray(aux, float)


def _surrogate_parts(p, coeffs, eta):
    """Signal sqrt term and denominator for every (k, n); both (K, N)."""
    comm = p[:-1, :]
    a_t = coeffs.alpha.T
    den = coeffs.beta.T * p[-1, :][None, :] + eta * interference_matrix(comm, coeffs) + 1.0
    sig = np.sqrt(np.maximum(a_t * comm, 0.0))  # tolerate projection dust at the zero bound
    return sig, den


def _surrogate_gain(p, y_t, coeffs, eta):
    """2 y sqrt(alpha w) - y^2 * denominator, the quantity inside log(1 + .)."""
    sig, den = _surrogate_parts(p, coeffs, eta)
    return 2.0 * y_t * sig - (y_t ** 2) * den


def _check_domain(gain):
    if np.any(gain <= -1.0):
        k_idx, n_idx = np.unravel_index(int(np.argmin(gain)), gain.shape)
        raise QDomainError(int(n_idx), int(k_idx), float(1.0 + gain[k_idx, n_idx]))


def update_y(power, coeffs: CoefficientBundle, eta: float) -> AuxiliaryMatrix:
    """Closed-form optimal auxiliaries sqrt(alpha w) / denominator."""
    p = _power_array(power)
    sig, den = _surrogate_parts(p, coeffs, eta)
    return AuxiliaryMatrix(y=(sig / den).T)


def q_value(power, aux, coeffs: CoefficientBundle, eta: float) -> float:
    """Quadratic-transform surrogate; equals the sum rate at optimal auxiliaries."""
    p = _power_array(power)
    y_t = _aux_array(aux).T
    gain = _surrogate_gain(p, y_t, coeffs, eta)
    _check_domain(gain)
    return float(np.log1p(gain).sum() / LOG2)


def q_gradient(power, aux, coeffs: CoefficientBundle, eta: float,
               sqrt_floor: float = 1e-12) -> np.ndarray:
    """Gradient of the surrogate w.r.t. the stacked power matrix, (K+1, N).

    The sqrt derivative is evaluated at max(w, sqrt_floor) so entries sitting
    exactly on the zero bound stay finite.
    """
    p = _power_array(power)
    y_t = _aux_array(aux).T
    a_t = coeffs.alpha.T
    b_t = coeffs.beta.T
    comm = p[:-1, :]
    gain = _surrogate_gain(p, y_t, coeffs, eta)
    _check_domain(gain)

    inv = 1.0 / (1.0 + gain)
    # own term: d(2 y sqrt(alpha w))/dw = y sqrt(alpha / max(w, floor))
    own = y_t * np.sqrt(a_t / np.maximum(comm, sqrt_floor)) * inv
    # cross term: -y^2 eta * d(interference)/dw
    y2_inv = (y_t ** 2) * inv
    if coeffs.own_gain:
        weighted = y2_inv * a_t
        cross = weighted.sum(axis=0, keepdims=True) - weighted
    else:
        tot = y2_inv.sum(axis=0, keepdims=True) - y2_inv
        cross = a_t * tot
    grad = np.empty_like(p)
    grad[:-1, :] = (own - eta * cross) / LOG2
    grad[-1, :] = -(y2_inv * b_t).sum(axis=0) / LOG2
    return grad


# ---------------------------------------------------------------------------
# projection onto the constraint polytope
# ---------------------------------------------------------------------------

def _satisfies_exactly(p, cons: Constraints) -> bool:
    if p.min() < 0.0 or (p - cons.upper).max() > 0.0:
        return False
    if p[:-1, :].sum() > cons.comm_budget or p[-1, :].sum() > cons.radar_budget:
        return False
    if cons.mu > 0.0:
        a, b = cons._sinr_normal()
        if (a * p).sum() < b:
            return False
    return True


def _cap_budget_project(x: np.ndarray, upper: np.ndarray, budget: float) -> np.ndarray:
    """Exact projection of one block onto {0 <= z <= upper, sum(z) <= budget}.

    The shifted clip z(lam) = clip(x - lam, 0, upper) has a piecewise-linear,
    non-increasing sum in lam; a single breakpoint sweep locates the exact
    multiplier, so no iteration tolerance is involved.
    """
    base = np.minimum(np.maximum(x, 0.0), upper)
    total = float(base.sum())
    if total <= budget:
        return base

    xf = x.ravel()
    uf = upper.ravel()
    lo = xf - uf   # entry starts decreasing past this lam
    hi = xf        # entry pinned at zero past this lam
    events = np.concatenate([lo, hi])
    keep = events > 0.0
    ev = events[keep]
    sc = np.concatenate([np.ones(xf.size), -np.ones(xf.size)])[keep]
    order = np.argsort(ev, kind="stable")
    ev = ev[order]
    sc = sc[order]

    active0 = float(np.count_nonzero(lo <= 0.0) - np.count_nonzero(hi <= 0.0))
    csum = np.cumsum(sc)
    active_before = np.empty_like(csum)
    active_before[0] = active0
    active_before[1:] = active0 + csum[:-1]
    seg = np.empty_like(ev)
    seg[0] = ev[0]
    seg[1:] = ev[1:] - ev[:-1]
    f_at_ev = total - np.cumsum(active_before * seg)

    idx = int(np.searchsorted(-f_at_ev, -budget))  # first event with f <= budget
    if idx == 0:
        lam = (total - budget) / active_before[0]
    else:
        over = f_at_ev[idx - 1] - budget
        lam = ev[idx - 1] + (over / active_before[idx] if over > 0.0 else 0.0)
    return np.minimum(np.maximum(x - lam, 0.0), upper)


def project(power, cons: Constraints, settings: SolverSettings | None = None,
            nu_state=None) -> np.ndarray:
    """Exact Euclidean projection onto the intersection of all constraint sets.

    The box-plus-budget part splits into independent comm and radar blocks
    with exact multiplier sweeps. When the radar-SINR halfspace is violated,
    its scalar multiplier is bracketed and resolved by safeguarded false
    position on the (monotone, piecewise-linear) halfspace residual; the
    returned point always sits on the feasible side.

    nu_state, if given, is a single-element list carrying the converged
    halfspace multiplier between calls; consecutive projections of nearby
    points then bracket in one or two residual evaluations.
    """
    settings = settings or SolverSettings()
    p = _power_array(power).astype(float, copy=True)
    if _satisfies_exactly(p, cons):
        return p

    def block(z):
        out = np.empty_like(z)
        out[:-1, :] = _cap_budget_project(z[:-1, :], cons.upper[:-1, :], cons.comm_budget)
        out[-1, :] = _cap_budget_project(z[-1, :], cons.upper[-1:, :].ravel(), cons.radar_budget)
        return out

    x = block(p)
    if cons.mu <= 0.0:
        return x
    a, b = cons._sinr_normal()
    tol = settings.dykstra_tol * max(1.0, abs(b))

    def shortfall(point):
        return b - float((a * point).sum())

    f_lo = -shortfall(x)
    if f_lo >= 0.0:
        return x

    # bracket the halfspace multiplier nu: f(nu) = a . block(p + nu a) - b
    a_norm2 = float((a * a).sum())
    hint = nu_state[0] if nu_state is not None else 0.0
    nu_hi = hint if hint > 0.0 else max(-f_lo / a_norm2, 1e-12)
    nu_lo, x_hi = 0.0, None
    for _ in range(settings.dykstra_max_sweeps):
        cand = block(p + nu_hi * a)
        f_hi = -shortfall(cand)
        if f_hi >= 0.0:
            x_hi = cand
            break
        nu_lo, f_lo = nu_hi, f_hi
        nu_hi *= 4.0
    if x_hi is None:
        raise ProjectionError(f_lo, cons.residuals(x))

    best = x_hi  # feasible side of the bracket
    stale_lo = 0
    for _ in range(settings.dykstra_max_sweeps):
        if f_hi <= tol or (nu_hi - nu_lo) <= 1e-15 * nu_hi:
            break
        # Illinois damping: the residual is concave in nu, so plain false
        # position parks on the lower endpoint; halving its weight restores
        # superlinear closure of the bracket
        w_lo = f_lo * (0.5 ** stale_lo)
        span = f_hi - w_lo
        nu = nu_hi - f_hi * (nu_hi - nu_lo) / span if span > 0.0 else 0.5 * (nu_lo + nu_hi)
        if not (nu_lo < nu < nu_hi):
            nu = 0.5 * (nu_lo + nu_hi)
        cand = block(p + nu * a)
        f_cand = -shortfall(cand)
        if f_cand >= 0.0:
            nu_hi, f_hi, best = nu, f_cand, cand
            stale_lo += 1
        else:
            nu_lo, f_lo = nu, f_cand
            stale_lo = 0
    if nu_state is not None:
        nu_state[0] = nu_hi
    return best


# ---------------------------------------------------------------------------
# concave subproblem for fixed auxiliaries
# ---------------------------------------------------------------------------

def solve_subproblem(power, aux, coeffs: CoefficientBundle, eta: float,
                     cons: Constraints, settings: SolverSettings | None = None,
                     stall_gain: float | None = None):
    """Projected gradient ascent with Armijo backtracking on the surrogate.

    Returns (P, info) with Q(P) >= Q(start) - 1e-12. The ascent direction is
    the projection of a trial gradient step; backtracking stays on the segment
    toward it, so every iterate remains feasible. Terminates when the
    unit-step projected-gradient norm falls below inner_tol, or when a window
    of iterations gains less than stall_gain (diminishing returns: the outer
    alternation redoes this work after the next auxiliary update anyway).
    """
    settings = settings or SolverSettings()
    p = _power_array(power).astype(float, copy=True)
    qv = q_value(p, aux, coeffs, eta)
    grad = q_gradient(p, aux, coeffs, eta, settings.sqrt_floor)
    step = 1.0
    iterations = 0
    pg_norm = math.inf
    prev_p = prev_grad = None
    window_gain = 0.0
    window_len = 0
    if stall_gain is None:
        stall_gain = 0.01 * settings.outer_tol * max(1.0, abs(qv))
    nu_probe = [0.0]
    nu_trial = [0.0]

    for iterations in range(1, settings.max_inner_iters + 1):
        check_pg = iterations % 5 == 1
        if check_pg:
            probe = project(p + grad, cons, settings, nu_probe)
            pg_norm = float(np.linalg.norm(probe - p))
            if pg_norm < settings.inner_tol:
                iterations -= 1
                break

        # spectral (Barzilai-Borwein) trial step, safeguarded by the backtracking
        if prev_p is not None:
            dp = p - prev_p
            curvature = -float(((grad - prev_grad) * dp).sum())
            if curvature > 0.0:
                step = min(max(float((dp * dp).sum()) / curvature, 1e-12), 1e8)
        if check_pg and step == 1.0:
            target = probe
        else:
            target = project(p + step * grad, cons, settings, nu_trial)
        direction = target - p
        slope = float((grad * direction).sum())
        if slope <= 0.0:
            # trial step too small to move off the boundary; widen and retry
            step = min(step * 8.0, 1e8)
            prev_p = prev_grad = None
            continue

        theta = 1.0
        accepted = False
        while theta > 1e-14:
            candidate = p + theta * direction
            try:
                q_cand = q_value(candidate, aux, coeffs, eta)
            except QDomainError:
                q_cand = -math.inf
            if q_cand >= qv + settings.armijo_slope * theta * slope:
                accepted = True
                break
            theta *= settings.armijo_shrink
        if not accepted:
            break
        prev_p, prev_grad = p, grad
        window_gain += q_cand - qv
        window_len += 1
        p, qv = candidate, q_cand
        grad = q_gradient(p, aux, coeffs, eta, settings.sqrt_floor)
        if theta < 0.1:
            # a heavily backtracked move poisons the next spectral pair;
            # shrink the trial step directly and rebuild curvature info
            step = max(step * theta, 1e-12)
            prev_p = prev_grad = None
        if window_len >= 10:
            if window_gain <= stall_gain:
                break
            window_gain = 0.0
            window_len = 0

    info = {"iterations": iterations, "pg_norm": pg_norm, "q_final": qv}
    return p, info


# ---------------------------------------------------------------------------
# feasibility
# ---------------------------------------------------------------------------

def _greedy_fill(order, caps, budget: float, xi=None, target_num: float = math.inf) -> np.ndarray:
    """Fill radar caps along `order` until the budget or a numerator target."""
    radar = np.zeros(caps.shape[0])
    remaining = budget
    num = 0.0
    for idx in order:
        if remaining <= 0.0 or num >= target_num:
            break
        take = min(caps[idx], remaining)
        if xi is not None and math.isfinite(target_num) and xi[idx] > 0.0:
            take = min(take, (target_num - num) / xi[idx])
        radar[idx] = take
        remaining -= take
        if xi is not None:
            num += xi[idx] * take
    return radar


def max_radar_sinr(coeffs: CoefficientBundle, cons: Constraints):
    """Best achievable radar SINR with zero comm power, plus its allocation.

    With w = 0 the SINR denominator is the constant N, so greedily filling
    radar power onto subcarriers in descending xi order is exactly optimal.
    """
    n = coeffs.n_subcarriers
    radar = _greedy_fill(np.argsort(-coeffs.xi, kind="stable"), cons.upper[-1, :],
                         cons.radar_budget)
    return float(coeffs.xi @ radar) / n, radar


def start_fill_orders(coeffs: CoefficientBundle, cons: Constraints, n_starts: int):
    """Deterministic radar-parking orders for multi-start.

    Where the radar budget lands is the combinatorial crux of the joint
    problem: parking on a subcarrier repels comm power from it for the rest
    of the ascent. The orders trade pure SINR headroom (descending xi)
    against sparing the subcarriers most valuable to comm.
    """
    orders = [np.argsort(-coeffs.xi, kind="stable")]
    if n_starts >= 2:
        ref = min(float(cons.upper[:-1, :].max()), cons.comm_budget / coeffs.n_subcarriers)
        r_hat = cons.upper[-1, :][:, None]
        clean = np.log1p(coeffs.alpha * ref).max(axis=1) / LOG2
        parked = np.log1p(coeffs.alpha * ref / (coeffs.beta * r_hat + 1.0)).max(axis=1) / LOG2
        damage = clean - parked  # comm rate lost by parking radar at cap here
        # sacrifice order: least-damaged columns first, xi breaks ties
        orders.append(np.lexsort((-coeffs.xi, damage)))
        if n_starts >= 3:
            orders.append(np.argsort(-coeffs.xi / (1.0 + damage), kind="stable"))
    seen = set()
    unique = []
    for order in orders:
        key = tuple(order.tolist())
        if key not in seen:
            seen.add(key)
            unique.append(order)
    return unique


def find_feasible(coeffs: CoefficientBundle, cons: Constraints,
                  fill_order=None) -> np.ndarray:
    """Deterministic interior starting point for the outer loop.

    Radar power comes from the greedy fill (scaled just inside its caps when
    the floor allows); every subcarrier provisionally goes to its best-alpha
    user at a uniform power level chosen to keep the SINR floor with margin.
    fill_order overrides the greedy fill order when the resulting allocation
    still clears the floor; otherwise the exact-max fill is kept.
    """
    best_sinr, radar = max_radar_sinr(coeffs, cons)
    if cons.mu > 0.0 and best_sinr < cons.mu:
        raise Infeasible(max_sinr=best_sinr, required=cons.mu)
    n_sub = coeffs.n_subcarriers
    if cons.mu <= 0.0:
        # no floor: radar power can only hurt the comm objective
        radar = np.zeros(n_sub)
    else:
        # park only the radar power needed to let comm spend its full budget:
        # numerator target covers the worst-case denominator at full comm use
        planned_comm = 0.9 * min(cons.comm_budget, float(cons.upper[:-1, :].max(axis=0).sum()))
        target = 1.05 * cons.mu * (float(coeffs.gamma.max()) * planned_comm + n_sub)
        order = np.argsort(-coeffs.xi, kind="stable") if fill_order is None else fill_order
        alt = _greedy_fill(order, cons.upper[-1, :], cons.radar_budget,
                           xi=coeffs.xi, target_num=target)
        if float(coeffs.xi @ alt) / n_sub >= cons.mu:
            radar = alt

    n, k = coeffs.n_subcarriers, coeffs.n_users
    shrunk = radar * (1.0 - 1e-6)
    if cons.mu > 0.0 and float(coeffs.xi @ shrunk) / n < cons.mu:
        shrunk = radar
    numerator = float(coeffs.xi @ shrunk)

    owner = coeffs.alpha.argmax(axis=1)
    owner_caps = cons.upper[owner, np.arange(n)]
    level = min(float(owner_caps.min()), cons.comm_budget / n)
    gamma_sum = float(coeffs.gamma.sum())
    if cons.mu > 0.0 and gamma_sum > 0.0:
        level = min(level, max(0.0, (numerator / cons.mu - n) / gamma_sum))
    level *= 0.9

    p = np.zeros((k + 1, n))
    p[owner, np.arange(n)] = level
    p[k, :] = shrunk
    return p


# ---------------------------------------------------------------------------
# discrete polish around the rounded solution
# ---------------------------------------------------------------------------

def _column_profile(p, coeffs):
    """Owner, column comm power and owner-row gains at a (near-)binary point."""
    comm = p[:-1, :]
    w = comm.sum(axis=0)
    owner = np.argmax(comm, axis=0)
    owned = w > 0.0
    cols = np.arange(p.shape[1])
    alpha_own = np.where(owned, coeffs.alpha[cols, owner], 0.0)
    beta_own = np.where(owned, coeffs.beta[cols, owner], 0.0)
    return owner, owned, w, alpha_own, beta_own


def _reassign_owners(p, coeffs) -> tuple[np.ndarray, bool]:
    """Move each column's comm power to the user with the best exact rate.

    At a binary point the column rate is log2(1 + alpha w / (beta r + 1)) for
    the owner only; ownership does not enter the budgets or the SINR
    denominator, so swapping rows at fixed powers is always feasible.
    """
    comm = p[:-1, :]
    r = p[-1, :]
    w = comm.sum(axis=0)
    rates = np.log1p(coeffs.alpha.T * w / (coeffs.beta.T * r + 1.0)) / LOG2  # (K, N)
    best = np.argmax(rates, axis=0)
    current = np.argmax(comm, axis=0)
    cols = np.arange(p.shape[1])
    move = (w > 0.0) & (rates[best, cols] > rates[current, cols] + 1e-12)
    if not move.any():
        return p, False
    out = p.copy()
    out[:-1, :] = 0.0
    keep_owner = np.where(move, best, current)
    out[keep_owner[w > 0.0], cols[w > 0.0]] = w[w > 0.0]
    return out, True


def _relocate_radar(p, coeffs, cons: Constraints) -> tuple[np.ndarray, bool]:
    """Greedy single-subcarrier radar relocation with exact rate deltas.

    The ascent can only slide radar power continuously, so it cannot hop
    between separated placements (moving it through intermediate points would
    break the SINR floor or lower the surrogate). Relocation evaluates, in
    closed form, emptying subcarrier a and topping up subcarrier b to the
    minimal level that keeps the SINR wall satisfied; only the two affected
    column rates change.
    """
    _, _, w, alpha_own, beta_own = _column_profile(p, coeffs)
    r = p[-1, :].copy()
    caps = cons.upper[-1, :]
    xi = np.maximum(coeffs.xi, 1e-300)
    den = float(coeffs.gamma @ w) + p.shape[1]
    wall = cons.mu * den  # required SINR numerator
    num = float(coeffs.xi @ r)
    total = float(r.sum())

    def col_rates(radar):
        return np.log1p(alpha_own * w / (beta_own * radar + 1.0)) / LOG2

    changed = False
    for _ in range(2 * p.shape[1]):
        base_rates = col_rates(r)
        best_delta = 1e-10
        best_move = None
        for a in np.nonzero(r > 0.0)[0]:
            ra = r[a]
            # minimal destination level keeping the wall: exact per candidate b
            base_num = num - coeffs.xi[a] * ra - coeffs.xi * r
            needed = np.maximum(wall * (1.0 + 1e-12) - base_num, 0.0) / xi
            ok = (needed <= caps) & (total - ra - r + needed <= cons.radar_budget + 1e-15)
            ok[a] = False
            if not ok.any():
                continue
            gain_b = col_rates(needed) - base_rates
            gain_a = math.log1p(alpha_own[a] * w[a]) / LOG2 - base_rates[a]
            delta = np.where(ok, gain_b + gain_a, -np.inf)
            b = int(np.argmax(delta))
            if delta[b] > best_delta:
                best_delta = float(delta[b])
                best_move = (int(a), b, float(needed[b]))
        if best_move is None:
            break
        a, b, rb = best_move
        r[a] = 0.0
        r[b] = rb
        num = float(coeffs.xi @ r)
        total = float(r.sum())
        changed = True
    if not changed:
        return p, False
    out = p.copy()
    out[-1, :] = r
    return out, True


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveResult:
    power: PowerMatrix
    assignment: Assignment
    relaxed_sum_rate: float
    binary_sum_rate: float
    achieved_sinr_db: float
    feasible: bool
    outer_iterations: int
    trace: np.ndarray = field(repr=False)  # rows: (q_value, sum_rate_bpcu, sinr_db)

    def trace_csv(self) -> str:
        lines = ["iteration,q_value,sum_rate_bpcu,sinr_db"]
        for i, (q, rate, sinr_db) in enumerate(self.trace):
            lines.append(f"{i},{float(q)!r},{float(rate)!r},{float(sinr_db)!r}")
        return "\n".join(lines) + "\n"


def _sinr_db(power, coeffs) -> float:
    value = radar_sinr(power, coeffs)
    return 10.0 * math.log10(max(value, 1e-300))


def _fp_loop(p, coeffs, eta, cons, settings, trace):
    rate = sum_relaxed_rate(p, coeffs, eta)
    iterations = 0
    last_gain = math.inf
    for iterations in range(1, settings.max_outer_iters + 1):
        aux = update_y(p, coeffs, eta)
        # inner effort scales with recent outer progress: no point polishing a
        # subproblem far beyond what the next auxiliary update will shift
        floor_gain = 0.01 * settings.outer_tol * max(1.0, abs(rate))
        stall = max(0.03 * last_gain, floor_gain) if math.isfinite(last_gain) else None
        p, info = solve_subproblem(p, aux, coeffs, eta, cons, settings, stall_gain=stall)
        new_rate = sum_relaxed_rate(p, coeffs, eta)
        if trace is not None:
            trace.append((info["q_final"], new_rate, _sinr_db(p, coeffs)))
        done = abs(new_rate - rate) <= settings.outer_tol * max(1.0, abs(rate))
        last_gain = abs(new_rate - rate)
        rate = new_rate
        if done:
            break
    return p, rate, iterations


def solve(channels: ChannelSet, config: ScenarioConfig,
          settings: SolverSettings | None = None,
          radar_floor: bool = True,
          init_power=None) -> SolveResult:
    """Run the alternating solver end to end and round to a binary solution.

    Raises Infeasible when even the comm-silent greedy radar fill cannot meet
    the SINR floor. The trace covers the relaxation phase; the refinement pass
    (off-owner entries frozen at zero, powers re-polished) only touches the
    reported final values.

    init_power, if given, seeds the ascent instead of the built-in feasible
    start (it is projected onto the constraint set first). Useful for
    continuation along a parameter sweep where the previous solution remains
    feasible for the next, looser constraint set.
    """
    settings = settings or SolverSettings()
    coeffs = CoefficientBundle.from_channels(channels, config)
    cons = Constraints.from_config(coeffs, config, radar_floor=radar_floor)
    eta = config.eta

    if init_power is not None:
        best_sinr, _ = max_radar_sinr(coeffs, cons)
        if cons.mu > 0.0 and best_sinr < cons.mu:
            raise Infeasible(best_sinr, cons.mu)
        starts = [project(init_power, cons, settings)]
    else:
        orders = start_fill_orders(coeffs, cons, settings.n_starts)
        starts = []
        for o in orders:
            p0 = find_feasible(coeffs, cons, fill_order=o)
            if not any(np.array_equal(p0, s) for s in starts):
                starts.append(p0)

    def run(p):
        rate0 = sum_relaxed_rate(p, coeffs, eta)
        trace = [(rate0, rate0, _sinr_db(p, coeffs))]
        p, rate, outer_iterations = _fp_loop(p, coeffs, eta, cons, settings, trace)
        if settings.refine:
            for _ in range(max(1, settings.polish_rounds)):
                rough = extract_assignment(p, config.p_c_cap_w)
                frozen = cons.frozen_to_owner(rough.owner)
                p = np.minimum(p, frozen.upper)  # zero off-owner entries, still feasible
                p, rate, _ = _fp_loop(p, coeffs, eta, frozen, settings, trace=None)
                # discrete escape moves the ascent cannot make: swap column
                # owners and relocate radar lumps, both exact-improvement-only
                p, moved_owner = _reassign_owners(p, coeffs)
                p, moved_radar = _relocate_radar(p, coeffs, cons)
                if not (moved_owner or moved_radar):
                    break
            rate = sum_relaxed_rate(p, coeffs, eta)
        assignment = extract_assignment(p, config.p_c_cap_w)
        return p, rate, outer_iterations, trace, assignment, binary_rate(assignment, channels, config)

    best = None
    for p0 in starts:
        candidate = run(p0)
        if best is None or candidate[5] > best[5]:
            best = candidate
    p, rate, outer_iterations, trace, assignment, bin_rate = best

    result = SolveResult(
        power=PowerMatrix(p),
        assignment=assignment,
        relaxed_sum_rate=rate,
        binary_sum_rate=bin_rate,
        achieved_sinr_db=_sinr_db(p, coeffs),
        feasible=cons.relative_violation(p) <= 1e-8,
        outer_iterations=outer_iterations,
        trace=np.asarray(trace),
    )
    return result
