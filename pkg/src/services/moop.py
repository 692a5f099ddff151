"""
Rate/power multi-objective problem.

Objectives are the rate gap delta_r (bits/use) and the power penalty
delta_rho (dB) relative to the reference pair {r_s, rho_s}. The attainable
set is bounded below by r_s - M(n, rho_s + delta_rho, eps_m); that lower
edge, restricted to the budget, is the Pareto boundary. Selections are
made by weighted l_theta scalarization over a discretised boundary.
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from src.domain.errors import DomainError, InfeasibleError, ValidationError
from src.domain.models import (
    ConstraintSet,
    ObjectiveBounds,
    ParetoBoundary,
    ParetoPoint,
    ReferencePair,
    Regime,
    ScalarizationSpec,
    TradeoffModel,
    TransmissionPair,
)
from src.link.fb_bounds import inflection_snr_db, max_rate_db, required_snr_db
from src.services.tradeoff import (
    constrained_max_rate,
    constrained_rate_curve,
    penalty_at_rate,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID_STEP_DB = 0.01
SNR_WINDOW_DB = (-40.0, 60.0)
LOG2_10_OVER_10 = math.log2(10.0) / 10.0


# -------------------------
# Reference and endpoints
# -------------------------

def reference_pair(n: int, r_s: float, eps_m: float) -> ReferencePair:
    """{r_s, rho_s} with rho_s = R^-1(n, r_s, eps_m)."""
    return ReferencePair(n=int(n), r_s=float(r_s), rho_s_db=required_snr_db(n, r_s, eps_m), eps_m=float(eps_m))


def rate_for_power(
    n: int,
    eps: float,
    model: TradeoffModel,
    constraints: ConstraintSet,
    target_rate: float,
) -> float:
    """SNR (dB) at which M(n, rho, eps) reaches `target_rate`."""
    if not 0.0 < float(target_rate) < 1.0:
        raise DomainError(f"target rate must lie in (0, 1), got {target_rate}")
    lo, hi = SNR_WINDOW_DB

    def gap(x_db: float) -> float:
        return constrained_max_rate(n, x_db, eps, model, constraints) - target_rate

    if gap(hi) < 0.0:
        raise InfeasibleError(f"rate {target_rate} is out of reach below {hi} dB under the constraints")
    if gap(lo) >= 0.0:
        return lo
    return float(brentq(gap, lo, hi, xtol=1e-10, maxiter=300))


# -------------------------
# Attainable set and boundary
# -------------------------

def attainable_contains(
    delta_r: float,
    delta_rho_db: float,
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
) -> bool:
    """[r_s - M(rho_s + delta_rho)]^+ <= delta_r <= r_s - r_m and 0 <= delta_rho <= rho_m - rho_s."""
    if not 0.0 <= delta_rho_db <= constraints.rho_m_db - ref.rho_s_db:
        return False
    m = constrained_max_rate(ref.n, ref.rho_s_db + delta_rho_db, ref.eps_m, model, constraints)
    return max(ref.r_s - m, 0.0) <= delta_r <= ref.r_s - constraints.r_m


def attainable_grid(
    delta_r_values,
    delta_rho_values,
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
) -> np.ndarray:
    """Membership matrix [i, j] for (delta_r_values[i], delta_rho_values[j])."""
    dr = np.asarray(delta_r_values, dtype=float)
    dp = np.asarray(delta_rho_values, dtype=float)
    budget = constraints.rho_m_db - ref.rho_s_db

    m = constrained_rate_curve(ref.n, ref.rho_s_db + dp, ref.eps_m, model, constraints)
    floor = np.maximum(ref.r_s - m, 0.0)
    in_budget = (dp >= 0.0) & (dp <= budget)
    return in_budget[None, :] & (dr[:, None] >= floor[None, :]) & (dr[:, None] <= ref.r_s - constraints.r_m)


def _delta_grid(start: float, end: float, step: float) -> np.ndarray:
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    grid = start + step * np.arange(count)
    if end - grid[-1] <= step / 2.0:
        grid[-1] = end
    else:
        grid = np.append(grid, end)
    return grid


def pareto_boundary(
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
    grid_step_db: float = DEFAULT_GRID_STEP_DB,
) -> ParetoBoundary:
    """
    Sweep delta_rho from its start to its end value on the grid; the last
    grid point is replaced by the exact end when they are closer than half
    a step. Both endpoints carry their closed-form values.
    """
    if not grid_step_db > 0.0:
        raise ValidationError(f"grid step must be > 0, got {grid_step_db}")
    n, r_s, rho_s, eps = ref.n, ref.r_s, ref.rho_s_db, ref.eps_m

    budget = constraints.rho_m_db - rho_s
    if budget < 0.0:
        raise InfeasibleError(f"reference SNR {rho_s:.3f} dB exceeds the budget {constraints.rho_m_db} dB")
    if r_s < constraints.r_m:
        raise InfeasibleError(f"reference rate {r_s} is below the minimum rate {constraints.r_m}")

    dp_s_min = penalty_at_rate(model, constraints, n, r_s)
    m_at_ref = constrained_max_rate(n, rho_s, eps, model, constraints)
    dr_s_min = max(r_s - m_at_ref, 0.0)

    if m_at_ref >= constraints.r_m:
        start = 0.0
    else:
        start = rate_for_power(n, eps, model, constraints, constraints.r_m) - rho_s
    end = min(dp_s_min, budget)
    if start > end:
        raise InfeasibleError("no feasible rate-power pair: the minimum rate needs more power than allowed")

    if end == start:
        deltas = np.array([start])
    else:
        deltas = _delta_grid(start, end, grid_step_db)

    rates = constrained_rate_curve(n, rho_s + deltas, eps, model, constraints)
    gaps = np.clip(r_s - rates, 0.0, None)
    if start == 0.0:
        gaps[0] = dr_s_min
    if end == dp_s_min:
        gaps[-1] = 0.0

    points = tuple(
        ParetoPoint(delta_r=float(g), delta_rho_db=float(d), rate=float(r_s - g), snr_db=float(rho_s + d))
        for g, d in zip(gaps, deltas)
    )
    logger.info(
        "pareto boundary r_s=%.3f: %s points, delta_rho in [%.4f, %.4f] dB, delta_r_s^min=%.4f",
        r_s, len(points), start, end, dr_s_min,
    )
    return ParetoBoundary(ref=ref, points=points, delta_rho_s_min=dp_s_min, delta_r_s_min=dr_s_min)


def boundary_shift_with_processor(
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
    T_b_values: Iterable[float],
    grid_step_db: float = DEFAULT_GRID_STEP_DB,
) -> list[tuple[float, ParetoBoundary | None]]:
    """Boundaries for a sweep of processor speeds; None where infeasible."""
    out: list[tuple[float, ParetoBoundary | None]] = []
    for T_b in T_b_values:
        try:
            b = pareto_boundary(ref, constraints.with_processor(T_b), model, grid_step_db)
        except InfeasibleError as exc:
            logger.warning("T_b=%g: %s", T_b, exc)
            b = None
        out.append((float(T_b), b))
    return out


# -------------------------
# Scalarization
# -------------------------

def power_cost(delta_rho_db, spec: ScalarizationSpec):
    """
    g_rho. shannon_log: log2(1 + delta_rho_lin) with delta_rho_lin the
    linear excess power ratio minus one, i.e. delta_rho_dB * log2(10)/10.
    raw_db_log: log2(max(delta_rho_dB, floor)).
    """
    d = np.asarray(delta_rho_db, dtype=float)
    if spec.power_cost_mode == "raw_db_log":
        out = np.log2(np.maximum(d, spec.log_floor_db))
    else:
        out = d * LOG2_10_OVER_10
    return float(out) if out.ndim == 0 else out


def objective_bounds(boundary: ParetoBoundary | Sequence[ParetoPoint], spec: ScalarizationSpec) -> ObjectiveBounds:
    points = boundary.points if isinstance(boundary, ParetoBoundary) else tuple(boundary)
    if not points:
        raise ValidationError("cannot bound an empty boundary")
    g_r = np.array([p.delta_r for p in points])
    g_p = power_cost(np.array([p.delta_rho_db for p in points]), spec)
    return ObjectiveBounds(
        ideal_r=float(g_r.min()),
        nadir_r=float(g_r.max()),
        ideal_p=float(np.min(g_p)),
        nadir_p=float(np.max(g_p)),
    )


def _normalise(values: np.ndarray, ideal: float, nadir: float) -> np.ndarray:
    span = nadir - ideal
    if span <= 0.0:
        return np.zeros_like(values)
    return (values - ideal) / span


def scalarize_many(
    delta_r,
    delta_rho_db,
    spec: ScalarizationSpec,
    bounds: ObjectiveBounds | None = None,
) -> np.ndarray:
    g_r = np.atleast_1d(np.asarray(delta_r, dtype=float))
    g_p = np.atleast_1d(power_cost(np.asarray(delta_rho_db, dtype=float), spec))
    if bounds is not None:
        g_r = _normalise(g_r, bounds.ideal_r, bounds.nadir_r)
        g_p = _normalise(g_p, bounds.ideal_p, bounds.nadir_p)

    w_r = spec.A * spec.alpha
    w_p = spec.B * (1.0 - spec.alpha)
    theta = float(spec.theta)

    if theta == 1.0:
        return w_r * g_r + w_p * g_p
    if math.isinf(theta):
        return np.maximum(w_r * g_r, w_p * g_p)

    if np.any(g_r < 0.0) or np.any(g_p < 0.0):
        raise ValidationError("finite theta > 1 needs non-negative objectives; set ScalarizationSpec.normalise")
    return (w_r * g_r ** theta + w_p * g_p ** theta) ** (1.0 / theta)


def scalarize(point: ParetoPoint, spec: ScalarizationSpec, bounds: ObjectiveBounds | None = None) -> float:
    return float(scalarize_many([point.delta_r], [point.delta_rho_db], spec, bounds)[0])


def boundary_scores(boundary: ParetoBoundary, spec: ScalarizationSpec) -> np.ndarray:
    """Scalarized value of every boundary point; rescaled only when spec.normalise is set."""
    dr = np.array([p.delta_r for p in boundary.points])
    dp = np.array([p.delta_rho_db for p in boundary.points])
    bounds = objective_bounds(boundary, spec) if spec.normalise else None
    return scalarize_many(dr, dp, spec, bounds)


def select_index(boundary: ParetoBoundary, spec: ScalarizationSpec) -> int:
    """First minimiser along the boundary, i.e. ties go to the smaller delta_rho."""
    return int(np.argmin(boundary_scores(boundary, spec)))


def pair_at(boundary: ParetoBoundary, index: int) -> TransmissionPair:
    p = boundary.points[index]
    return TransmissionPair(rate=p.rate, snr_db=p.snr_db, delta_r=p.delta_r, delta_rho_db=p.delta_rho_db, index=index)


def optimize(
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
    spec: ScalarizationSpec,
    *,
    boundary: ParetoBoundary | None = None,
    grid_step_db: float = DEFAULT_GRID_STEP_DB,
) -> TransmissionPair:
    """Pareto-optimal {r_s - delta_r*, rho_s + delta_rho*} minimising the scalarization."""
    if boundary is None:
        boundary = pareto_boundary(ref, constraints, model, grid_step_db)
    return pair_at(boundary, select_index(boundary, spec))


def accessible_points(
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
    theta: float,
    alpha_grid: Iterable[float],
    *,
    spec: ScalarizationSpec | None = None,
    boundary: ParetoBoundary | None = None,
    grid_step_db: float = DEFAULT_GRID_STEP_DB,
) -> list[int]:
    """Sorted distinct boundary indices selected as alpha sweeps the grid."""
    if boundary is None:
        boundary = pareto_boundary(ref, constraints, model, grid_step_db)
    base = (spec or ScalarizationSpec()).with_theta(theta)
    hits = {select_index(boundary, base.with_alpha(float(a))) for a in alpha_grid}
    return sorted(hits)


# -------------------------
# SNR regimes
# -------------------------

def classify_regime(
    ref: ReferencePair,
    eps_m: float,
    model: TradeoffModel,
    constraints: ConstraintSet,
) -> Regime:
    """
    Low when rho_s <= rho_i, High when rho_s > rho_i + delta_rho_i^min,
    Medium otherwise; delta_rho_i^min is the penalty at the rate the
    normal approximation gives at rho_i.
    """
    rho_i = inflection_snr_db(ref.n, eps_m)
    rate_i = max_rate_db(ref.n, rho_i, eps_m)
    shifted = rho_i + penalty_at_rate(model, constraints, ref.n, rate_i)

    if ref.rho_s_db <= rho_i:
        name = "low"
    elif ref.rho_s_db > shifted:
        name = "high"
    else:
        name = "medium"
    logger.debug("regime r_s=%.3f rho_s=%.3f rho_i=%.3f shifted=%.3f -> %s", ref.r_s, ref.rho_s_db, rho_i, shifted, name)
    return Regime(name=name, rho_s_db=ref.rho_s_db, rho_i_db=rho_i, rho_i_shifted_db=shifted)
