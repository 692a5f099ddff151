"""
Battery-powered transmitter: every codeword picks a Pareto-optimal
{r, rho} with a weight alpha(t) that follows the remaining battery t.

The boundary and each pair's energy per codeword are computed once.
Consecutive codewords that keep the same pair are charged as one run; the
run ends where the selection changes, found by bisection over the codeword
count (the selection only moves one way as t falls). `codeword_log`
expands the runs back into one row per transmitted codeword.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal, Sequence

import numpy as np

from src.domain.errors import DomainError, InfeasibleError, ValidationError
from src.domain.models import (
    BatteryState,
    ConstraintSet,
    LinkBudget,
    ParetoBoundary,
    Policy,
    ReferencePair,
    ScalarizationSpec,
    SimResult,
    SimStep,
    TradeoffModel,
)
from src.services.moop import (
    DEFAULT_GRID_STEP_DB,
    objective_bounds,
    pareto_boundary,
    reference_pair,
    scalarize_many,
)
from src.utils.units import dbm_to_watts, linear_to_db

logger = logging.getLogger(__name__)

AlphaScale = Literal["formula", "unit"]
TScale = Literal["fraction", "percent"]

POLICIES: tuple[Policy, ...] = ("theta1", "thetainf", "fixed0", "fixed1")


# -------------------------
# Weight and link budget
# -------------------------

def alpha_from_battery(t: float, t_scale: TScale = "fraction") -> float:
    """alpha = 1 - (1 + (t / (1 + t))^2)^-1, t in [0, 1] (or [0, 100] for percent)."""
    t = float(t)
    top = 100.0 if t_scale == "percent" else 1.0
    if not 0.0 <= t <= top:
        raise DomainError(f"battery level must lie in [0, {top:g}], got {t}")
    u = t / (1.0 + t)
    return 1.0 - 1.0 / (1.0 + u * u)


# A * alpha(1/2) = B * (1 - alpha(1/2)): the two weighted-sum endpoints
# score alike at half battery on normalised objectives
HALF_BATTERY_A = (1.0 - alpha_from_battery(0.5)) / alpha_from_battery(0.5)

CASE_STUDY_SPEC = ScalarizationSpec(
    theta=1.0,
    alpha=0.5,
    A=HALF_BATTERY_A,
    B=1.0,
    power_cost_mode="shannon_log",
    normalise=True,
)


def weight_for_battery(t: float, alpha_scale: AlphaScale = "formula", t_scale: TScale = "fraction") -> float:
    """
    Scalarization weight for a remaining fraction t in [0, 1].

    `formula` returns alpha_from_battery directly; `unit` divides by its
    value at a full battery so the weight spans [0, 1].
    """
    if alpha_scale not in ("formula", "unit"):
        raise ValidationError(f"unknown alpha scale: {alpha_scale}")
    if t_scale not in ("fraction", "percent"):
        raise ValidationError(f"unknown t scale: {t_scale}")
    if not 0.0 <= float(t) <= 1.0:
        raise DomainError(f"remaining fraction must lie in [0, 1], got {t}")

    top = 100.0 if t_scale == "percent" else 1.0
    alpha = alpha_from_battery(float(t) * top, t_scale)
    if alpha_scale == "unit":
        alpha /= alpha_from_battery(top, t_scale)
    return min(max(alpha, 0.0), 1.0)


def policy_weight(policy: Policy, t: float, alpha_scale: AlphaScale = "formula", t_scale: TScale = "fraction") -> float:
    """alpha used by `policy` at remaining fraction t; the fixed baselines ignore t."""
    if policy == "fixed0":
        return 0.0
    if policy == "fixed1":
        return 1.0
    return weight_for_battery(t, alpha_scale, t_scale)


def tx_power_watts(rho_db: float, link: LinkBudget) -> float:
    """P_dBm = rho + noise + PL(1 m) + 10 * exponent * log10(d)."""
    p_dbm = (
        float(rho_db)
        + link.noise_dbm
        + link.pathloss_ref_db
        + link.pathloss_exponent * linear_to_db(link.distance_m)
    )
    return dbm_to_watts(p_dbm)


def energy_efficiency(result: SimResult, battery: BatteryState) -> float:
    """n * sum(rate per codeword) / capacity in joules."""
    if result.total_transmissions == 0:
        return 0.0
    bits = result.n * math.fsum(s.rate * s.codewords for s in result.steps)
    return bits / battery.capacity_joules


# -------------------------
# Simulator
# -------------------------

@dataclass(frozen=True)
class PolicySummary:
    r_s: float
    policy: str
    transmissions: int
    info_bits: float
    efficiency_bits_per_joule: float
    ratio_to_full_power: float


class BatterySimulator:
    """
    Drains a battery codeword by codeword under one reference pair.

    The boundary is shared by every policy run on the same simulator.
    """

    def __init__(
        self,
        *,
        ref: ReferencePair,
        constraints: ConstraintSet,
        model: TradeoffModel,
        link: LinkBudget,
        spec: ScalarizationSpec = CASE_STUDY_SPEC,
        alpha_scale: AlphaScale = "formula",
        t_scale: TScale = "fraction",
        grid_step_db: float = DEFAULT_GRID_STEP_DB,
        boundary: ParetoBoundary | None = None,
    ) -> None:
        self._ref = ref
        self._constraints = constraints
        self._link = link
        self._spec = spec
        self._alpha_scale = alpha_scale
        self._t_scale = t_scale

        try:
            self._boundary = boundary or pareto_boundary(ref, constraints, model, grid_step_db)
        except InfeasibleError as exc:
            raise InfeasibleError(f"no feasible pair at full battery: {exc}") from exc

        pts = self._boundary.points
        self._dr = np.array([p.delta_r for p in pts])
        self._dp = np.array([p.delta_rho_db for p in pts])
        # same scores moop.select_index would give on this boundary
        self._bounds = objective_bounds(self._boundary, spec) if spec.normalise else None
        symbol_time = ref.n * constraints.T_s
        self._energy = np.array([tx_power_watts(p.snr_db, link) * symbol_time for p in pts])

    @property
    def boundary(self) -> ParetoBoundary:
        return self._boundary

    def _theta_for(self, policy: Policy) -> float:
        return math.inf if policy == "thetainf" else 1.0

    def _alpha_for(self, policy: Policy, t: float) -> float:
        return policy_weight(policy, t, self._alpha_scale, self._t_scale)

    def select(self, policy: Policy, t: float) -> int:
        """Boundary index chosen at remaining fraction t."""
        spec = self._spec.with_theta(self._theta_for(policy)).with_alpha(self._alpha_for(policy, t))
        return int(np.argmin(scalarize_many(self._dr, self._dp, spec, self._bounds)))

    def _run_length(self, policy: Policy, idx: int, remaining: float, capacity: float, energy: float) -> int:
        # largest m such that codewords 0..m-1 all select idx and are funded
        affordable = int(remaining // energy)
        while affordable > 0 and remaining - affordable * energy < 0.0:
            affordable -= 1
        if affordable <= 1:
            return affordable

        def same(j: int) -> bool:
            t = max(remaining - j * energy, 0.0) / capacity
            return self.select(policy, t) == idx

        if same(affordable - 1):
            return affordable
        lo, hi = 0, affordable - 1    # same(lo) holds, same(hi) does not
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if same(mid):
                lo = mid
            else:
                hi = mid
        return lo + 1

    def run(self, policy: Policy, battery: BatteryState) -> SimResult:
        if policy not in POLICIES:
            raise ValidationError(f"unknown policy: {policy}")

        capacity = battery.capacity_joules
        remaining = battery.remaining_joules
        steps: list[SimStep] = []
        transmissions = 0

        while True:
            t = remaining / capacity
            idx = self.select(policy, t)
            energy = float(self._energy[idx])
            if remaining < energy:
                break
            count = self._run_length(policy, idx, remaining, capacity, energy)
            if count == 0:
                break

            p = self._boundary.points[idx]
            spent = count * energy
            steps.append(
                SimStep(
                    t=t,
                    alpha=self._alpha_for(policy, t),
                    rate=p.rate,
                    snr_db=p.snr_db,
                    delta_r=p.delta_r,
                    energy_j=spent,
                    codewords=count,
                )
            )
            remaining = max(remaining - spent, 0.0)
            transmissions += count
            logger.debug("%s: %s codewords at r=%.4f rho=%.3f dB, t=%.4f", policy, count, p.rate, p.snr_db, t)

        bits = self._ref.n * math.fsum(s.rate * s.codewords for s in steps)
        result = SimResult(
            policy=policy,
            n=self._ref.n,
            r_s=self._ref.r_s,
            total_transmissions=transmissions,
            total_info_bits=bits,
            steps=tuple(steps),
            efficiency_bits_per_joule=bits / capacity,
            remaining_joules=remaining,
            capacity_joules=capacity,
            alpha_scale=self._alpha_scale,
            t_scale=self._t_scale,
        )
        logger.info(
            "battery %s r_s=%.2f: %s codewords, %.4g bits/J over %s runs",
            policy, self._ref.r_s, transmissions, result.efficiency_bits_per_joule, len(steps),
        )
        return result


# -------------------------
# Per-codeword log
# -------------------------

@dataclass(frozen=True)
class CodewordRow:
    """One transmitted codeword; `t` is the remaining fraction before it was sent."""
    index: int
    t: float
    alpha: float
    rate: float
    snr_db: float
    energy_j: float


def codeword_log(result: SimResult) -> Iterator[CodewordRow]:
    """Expand the runs of `result` into one row per codeword, in transmission order."""
    index = 0
    for step in result.steps:
        energy = step.energy_j / step.codewords
        start = step.t * result.capacity_joules
        for j in range(step.codewords):
            t = max(start - j * energy, 0.0) / result.capacity_joules
            yield CodewordRow(
                index=index,
                t=t,
                alpha=policy_weight(result.policy, t, result.alpha_scale, result.t_scale),
                rate=step.rate,
                snr_db=step.snr_db,
                energy_j=energy,
            )
            index += 1


def run_simulation(
    ref: ReferencePair,
    constraints: ConstraintSet,
    model: TradeoffModel,
    policy: Policy,
    link: LinkBudget,
    battery: BatteryState,
    *,
    spec: ScalarizationSpec = CASE_STUDY_SPEC,
    alpha_scale: AlphaScale = "formula",
    t_scale: TScale = "fraction",
    grid_step_db: float = DEFAULT_GRID_STEP_DB,
) -> SimResult:
    sim = BatterySimulator(
        ref=ref,
        constraints=constraints,
        model=model,
        link=link,
        spec=spec,
        alpha_scale=alpha_scale,
        t_scale=t_scale,
        grid_step_db=grid_step_db,
    )
    return sim.run(policy, battery)


def compare_policies(
    rates: Iterable[float],
    *,
    n: int,
    constraints: ConstraintSet,
    model: TradeoffModel,
    link: LinkBudget,
    capacity_wh: float,
    policies: Sequence[Policy] = POLICIES,
    spec: ScalarizationSpec = CASE_STUDY_SPEC,
    alpha_scale: AlphaScale = "formula",
    t_scale: TScale = "fraction",
    grid_step_db: float = DEFAULT_GRID_STEP_DB,
) -> list[PolicySummary]:
    """Totals per (r_s, policy); ratios are against the fixed1 (full power) run."""
    out: list[PolicySummary] = []
    for r_s in rates:
        ref = reference_pair(n, float(r_s), constraints.eps_m)
        sim = BatterySimulator(
            ref=ref, constraints=constraints, model=model, link=link, spec=spec,
            alpha_scale=alpha_scale, t_scale=t_scale, grid_step_db=grid_step_db,
        )
        results = {p: sim.run(p, BatteryState.full(capacity_wh)) for p in policies}
        base = results["fixed1"] if "fixed1" in results else sim.run("fixed1", BatteryState.full(capacity_wh))
        for p in policies:
            res = results[p]
            ratio = res.total_transmissions / base.total_transmissions if base.total_transmissions else math.nan
            out.append(
                PolicySummary(
                    r_s=float(r_s),
                    policy=p,
                    transmissions=res.total_transmissions,
                    info_bits=res.total_info_bits,
                    efficiency_bits_per_joule=res.efficiency_bits_per_joule,
                    ratio_to_full_power=ratio,
                )
            )
    return out
