"""
Complexity / power-gap trade-off.

The law log2 K = F(delta_rho) = (a * sqrt(delta_rho) + b)^-1 (delta_rho in
dB) ties decoder complexity to the extra SNR it needs over the normal
approximation. Together with the latency budget kappa it gives the
smallest penalty any decoder can meet, the constrained maximal rate M and
the rate gap.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from dotenv import dotenv_values
from scipy.optimize import lsq_linear

from src.domain.errors import DomainError, FitError, UnreachableError, ValidationError
from src.domain.models import (
    BlocklengthParams,
    CodeSpec,
    ConstraintSet,
    DecoderConfig,
    GapPoint,
    TradeoffModel,
)
from src.link.fb_bounds import max_rate_curve_db, required_snr_db
from src.link.os_decoder import estimate_cep, log2_complexity
from src.utils.units import db_to_linear

logger = logging.getLogger(__name__)

# fixed-point bisection on r: 2^-40 is far below the 1e-7 rate tolerance
RATE_BISECTION_STEPS = 40
GAP_BRACKET_DB = 0.05
POSITIVE_FLOOR = 1e-12


# -------------------------
# Closed forms
# -------------------------

def model_log2_complexity(model: TradeoffModel, delta_rho_db):
    """F(delta_rho) = 1 / (a * sqrt(delta_rho) + b)."""
    d = np.asarray(delta_rho_db, dtype=float)
    if np.any(d < 0.0):
        raise DomainError("power penalty must be >= 0")
    out = 1.0 / (model.a * np.sqrt(d) + model.b)
    return float(out) if out.ndim == 0 else out


def inverse_law(model: TradeoffModel, log2_kappa: float) -> float:
    """Smallest delta_rho (dB) with F(delta_rho) <= log2_kappa; inf when log2_kappa <= 0."""
    lk = float(log2_kappa)
    if lk <= 0.0:
        return math.inf
    slack = max(1.0 - model.b * lk, 0.0)
    return (slack / (model.a * lk)) ** 2


def complexity_budget(constraints: ConstraintSet, n: int, k: float) -> float:
    """kappa = [L_m - n T_s]^+ / (k T_b)."""
    if not float(k) >= 1.0:
        raise DomainError(f"k must be >= 1, got {k}")
    slack = max(constraints.L_m - n * constraints.T_s, 0.0)
    return slack / (float(k) * constraints.T_b)


def min_power_penalty(model: TradeoffModel, kappa: float) -> float:
    """
    delta_rho^min in dB. Returns math.inf when kappa <= 1: no decoder
    fits the deadline at any power.
    """
    kappa = float(kappa)
    if kappa < 0.0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if kappa <= 1.0:
        return math.inf
    return inverse_law(model, math.log2(kappa))


def _penalties(model: TradeoffModel, constraints: ConstraintSet, n: int, k: np.ndarray) -> np.ndarray:
    # vectorised min_power_penalty(complexity_budget(...)); k = 0 means no decoder load
    slack = max(constraints.L_m - n * constraints.T_s, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(k > 0.0, slack / (np.maximum(k, POSITIVE_FLOOR) * constraints.T_b), np.inf)
        lk = np.log2(kappa)
        pen = (np.maximum(1.0 - model.b * lk, 0.0) / (model.a * lk)) ** 2
    pen = np.where(np.isinf(kappa), 0.0, pen)
    return np.where(kappa <= 1.0, np.inf, pen)


def penalty_at_rate(model: TradeoffModel, constraints: ConstraintSet, n: int, rate: float) -> float:
    """delta_rho^min for the k = n * rate information bits a rate implies (0 when k < 1)."""
    k = n * float(rate)
    if k < 1.0:
        return 0.0
    return min_power_penalty(model, complexity_budget(constraints, n, k))


def zero_gap_processor_threshold(k: int, model: TradeoffModel, constraints: ConstraintSet, n: int) -> float:
    """T_b below which delta_rho^min = 0: [L_m - n T_s]^+ / (k * 2^(1/b))."""
    if int(k) < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    slack = max(constraints.L_m - n * constraints.T_s, 0.0)
    return slack / (int(k) * 2.0 ** (1.0 / model.b))


# -------------------------
# Constrained maximal rate
# -------------------------

def constrained_rate_curve(
    n: int,
    rho_db,
    eps: float,
    model: TradeoffModel,
    constraints: ConstraintSet,
) -> np.ndarray:
    """
    M(n, rho, eps) on a dB grid.

    Solves r = R(n, rho - delta_rho^min(kappa(n r)), eps) by bisection on
    r in [0, 1]; the right side falls as r grows, so the crossing is
    unique. The same fixed number of halvings is used at every grid point.
    """
    BlocklengthParams(n=n, eps=eps)
    x = np.atleast_1d(np.asarray(rho_db, dtype=float))
    lo = np.zeros_like(x)
    hi = np.ones_like(x)

    def excess(r: np.ndarray) -> np.ndarray:
        pen = _penalties(model, constraints, n, n * r)
        shifted = x - pen
        out = np.zeros_like(x)
        ok = np.isfinite(shifted)
        if np.any(ok):
            out[ok] = max_rate_curve_db(n, shifted[ok], eps)
        return out - r

    for _ in range(RATE_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        up = excess(mid) > 0.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)

    return lo


def constrained_max_rate(
    n: int,
    rho_db: float,
    eps: float,
    model: TradeoffModel,
    constraints: ConstraintSet,
) -> float:
    return float(constrained_rate_curve(n, [rho_db], eps, model, constraints)[0])


def min_rate_gap(
    n: int,
    rho_db: float,
    eps: float,
    model: TradeoffModel,
    constraints: ConstraintSet,
) -> float:
    """delta_r^min = R(n, rho, eps) - M(n, rho, eps), never negative."""
    unconstrained = float(max_rate_curve_db(n, [rho_db], eps)[0])
    return max(unconstrained - constrained_max_rate(n, rho_db, eps, model, constraints), 0.0)


# -------------------------
# Model fitting
# -------------------------

def fit_model(points: Sequence[GapPoint]) -> TradeoffModel:
    """
    Least squares of 1/log2_K on (sqrt(delta_rho), 1). A fit with a
    non-positive constant is redone with both constants bounded below.
    """
    if len(points) < 3:
        raise FitError(f"need at least 3 gap points, got {len(points)}")

    d = np.array([p.delta_rho_db for p in points], dtype=float)
    logk = np.array([p.log2_K for p in points], dtype=float)
    X = np.column_stack([np.sqrt(d), np.ones_like(d)])
    target = 1.0 / logk

    if np.linalg.matrix_rank(X) < 2:
        raise FitError("gap points need at least two distinct power penalties")

    coef, *_ = np.linalg.lstsq(X, target, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    if a <= 0.0 or b <= 0.0:
        logger.warning("unconstrained fit gave a=%.4g b=%.4g; refitting with positivity", a, b)
        res = lsq_linear(X, target, bounds=([POSITIVE_FLOOR, POSITIVE_FLOOR], [np.inf, np.inf]))
        a, b = (float(v) for v in res.x)

    predicted = 1.0 / (a * np.sqrt(d) + b)
    residual = float(np.sqrt(np.mean(((predicted - logk) / logk) ** 2)))
    logger.info("fitted trade-off law a=%.6g b=%.6g residual=%.3g", a, b, residual)
    return TradeoffModel(a=a, b=b, fit_residual=residual)


def format_model(model: TradeoffModel) -> str:
    return f"a={model.a!r}\nb={model.b!r}\nresidual={model.fit_residual!r}\n"


def parse_model(text: str) -> TradeoffModel:
    values = dotenv_values(stream=io.StringIO(text))
    missing = [key for key in ("a", "b") if not values.get(key)]
    if missing:
        raise ValidationError(f"model file lacks {', '.join(missing)}")
    try:
        return TradeoffModel(
            a=float(values["a"]),
            b=float(values["b"]),
            fit_residual=float(values.get("residual") or 0.0),
        )
    except ValueError as exc:
        raise ValidationError(f"model values must be numbers: {exc}") from exc


def write_model(path: str | Path, model: TradeoffModel) -> Path:
    target = Path(path)
    target.write_text(format_model(model), encoding="utf-8")
    return target


def read_model(path: str | Path) -> TradeoffModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))


# -------------------------
# Measured power gaps
# -------------------------

@dataclass(frozen=True)
class GapSearch:
    """Monte Carlo and search-window settings shared by a gap campaign."""
    max_trials: int = 10_000
    target_errors: int = 100
    seed: int = 1
    window_db: tuple[float, float] = (-2.0, 12.0)
    bracket_db: float = GAP_BRACKET_DB
    threads: int = 1


class GapCampaign:
    """
    Measures the SNR at which a decoder reaches a target CEP and turns it
    into GapPoints against a reference SNR.

    Every CEP point in the bisection reuses the campaign seed, so repeated
    campaigns give identical points.
    """

    def __init__(self, *, code: CodeSpec, eps_target: float, search: GapSearch | None = None) -> None:
        if not 0.0 < float(eps_target) < 0.5:
            raise DomainError(f"target CEP must lie in (0, 0.5), got {eps_target}")
        self._code = code
        self._eps = float(eps_target)
        self._search = search or GapSearch()

    def _cep(self, config: DecoderConfig, snr_db: float) -> float:
        s = self._search
        est = estimate_cep(
            self._code, config, db_to_linear(snr_db), s.max_trials, s.target_errors, s.seed,
            threads=s.threads, snr_db=snr_db,
        )
        return est.cep

    def required_snr_db(self, config: DecoderConfig) -> float:
        """Bisection over SNR until the bracket is narrower than `bracket_db`."""
        lo, hi = self._search.window_db
        if self._cep(config, hi) > self._eps:
            raise UnreachableError(
                f"order {config.s} misses CEP {self._eps:g} even at {hi} dB"
            )
        if self._cep(config, lo) <= self._eps:
            return lo

        while hi - lo >= self._search.bracket_db:
            mid = 0.5 * (lo + hi)
            if self._cep(config, mid) <= self._eps:
                hi = mid
            else:
                lo = mid
            logger.debug("gap bracket s=%s [%.4f, %.4f] dB", config.s, lo, hi)
        return 0.5 * (lo + hi)

    def normal_reference_db(self) -> float:
        """rho_s of the normal approximation at the code's own rate."""
        return required_snr_db(self._code.n, self._code.rate, self._eps)

    def measure_power_gap(self, config: DecoderConfig, reference_snr_db: float) -> GapPoint:
        rho_needed = self.required_snr_db(config)
        gap = rho_needed - float(reference_snr_db)
        if gap < 0.0:
            logger.warning("order %s beat the reference by %.3f dB; clamping to 0", config.s, -gap)
            gap = 0.0
        return GapPoint(
            delta_rho_db=gap,
            log2_K=log2_complexity(self._code.n, self._code.k, config.s, config.q),
            order=int(config.s),
        )

    def measure_gap_points(
        self,
        orders: Sequence[int],
        *,
        q: int = 8,
        reference_snr_db: float | None = None,
    ) -> list[GapPoint]:
        ref = self.normal_reference_db() if reference_snr_db is None else float(reference_snr_db)
        logger.info(
            "measuring gaps for (%s,%s) orders=%s eps=%g ref=%.3f dB",
            self._code.n, self._code.k, list(orders), self._eps, ref,
        )
        return [self.measure_power_gap(DecoderConfig(s=int(s), q=q, fast=True), ref) for s in orders]


def measure_power_gap(
    code: CodeSpec,
    config: DecoderConfig,
    eps_target: float,
    reference_snr_db: float,
    search: GapSearch | None = None,
) -> GapPoint:
    return GapCampaign(code=code, eps_target=eps_target, search=search).measure_power_gap(config, reference_snr_db)
