"""
BI-AWGN capacity and dispersion, the two-term normal approximation of the
maximal rate, its inverse in SNR, and the inflection of the rate curve.

All curve geometry is computed on the dB axis. Functions taking `rho`
expect a linear SNR; the `_db` variants take decibels.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, erfcinv, roots_hermitenorm

from src.domain.errors import DomainError, InfeasibleError, NotFoundError, QuadratureError
from src.domain.models import BlocklengthParams, ChannelMoments, QuadratureSpec
from src.utils.units import db_to_linear

logger = logging.getLogger(__name__)

LOG2E = 1.0 / math.log(2.0)
DEFAULT_QUAD = QuadratureSpec()

# dB window searched by the SNR inverses and the inflection scan
SNR_SEARCH_DB = (-40.0, 60.0)
INFLECTION_WINDOW_DB = (-20.0, 20.0)
INFLECTION_STEP_DB = 0.01
INFLECTION_TOL_DB = 1e-4


# -------------------------
# Gaussian Q-function
# -------------------------

def q_function(x):
    """Q(x) = 0.5 * erfc(x / sqrt(2)); scalar or array."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def q_inv(p: float) -> float:
    """Inverse of the Gaussian Q-function on (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"q_inv needs 0 < p < 1, got {p}")
    return float(math.sqrt(2.0) * erfcinv(2.0 * p))


# -------------------------
# Capacity and dispersion
# -------------------------

@lru_cache(maxsize=16)
def _hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    # probabilists' Hermite rule, weights normalised to the N(0, 1) density
    nodes, weights = roots_hermitenorm(order)
    weights = weights / math.sqrt(2.0 * math.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _moments_at_order(rho: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = _hermite_rule(order)
    root = np.sqrt(rho)[:, None]
    exponent = -2.0 * rho[:, None] + 2.0 * z[None, :] * root
    # 1 - log2(1 + e^x), with log1p(e^x) evaluated without overflow
    density = 1.0 - np.logaddexp(0.0, exponent) * LOG2E
    capacity = density @ w
    dispersion = ((density - capacity[:, None]) ** 2) @ w
    return capacity, dispersion


def channel_moments_array(
    rho,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Capacity and dispersion for an array of linear SNRs.

    The order is doubled until two consecutive orders agree to `quad.tol`;
    each SNR stops at the first order where it settles and keeps the
    higher-order value.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho < 0.0) or not np.all(np.isfinite(rho)):
        raise DomainError("SNR must be finite and >= 0")

    order = int(quad.order)
    cap, disp = _moments_at_order(rho, order)
    pending = np.ones(rho.shape, dtype=bool)
    while np.any(pending):
        nxt = order * 2
        if nxt > quad.max_order:
            worst = float(rho[pending][0])
            raise QuadratureError(
                f"quadrature did not settle to {quad.tol:g} by order {order} (rho={worst:g})"
            )
        cap2, disp2 = _moments_at_order(rho[pending], nxt)
        gap = np.maximum(np.abs(cap2 - cap[pending]), np.abs(disp2 - disp[pending]))
        if not np.all(np.isfinite(gap)):
            raise QuadratureError(f"quadrature produced non-finite moments at order {nxt}")
        idx = np.flatnonzero(pending)
        cap[idx], disp[idx] = cap2, disp2
        pending[idx[gap <= quad.tol]] = False
        logger.debug("quadrature order %s -> %s (%d unsettled)", order, nxt, int(pending.sum()))
        order = nxt

    # cancellation can leave tiny negatives
    return np.clip(cap, 0.0, 1.0), np.maximum(disp, 0.0)


@lru_cache(maxsize=4096)
def channel_moments(rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> ChannelMoments:
    cap, disp = channel_moments_array(np.array([float(rho)]), quad)
    return ChannelMoments(capacity=float(cap[0]), dispersion=float(disp[0]))


# -------------------------
# Normal approximation
# -------------------------

def _backoff(n: int, eps: float) -> float:
    # V is already in bits^2, so the nats-to-bits factor is inside sqrt(V)
    return q_inv(eps) / math.sqrt(n)


def max_rate_curve(n: int, rho, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """R(n, rho, eps) for an array of linear SNRs, clamped to [0, 1]."""
    BlocklengthParams(n=n, eps=eps)
    cap, disp = channel_moments_array(rho, quad)
    return np.clip(cap - np.sqrt(disp) * _backoff(n, eps), 0.0, 1.0)


def max_rate_curve_db(n: int, rho_db, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    return max_rate_curve(n, np.atleast_1d(db_to_linear(rho_db)), eps, quad)


def max_rate(n: int, rho: float, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """
    C - sqrt(V / n) * Q^-1(eps) with C in bits and V in bits^2, clamped
    to [0, 1]. Equivalent to the nats form sqrt(V_nats / n) * Q^-1(eps) * log2(e).

    The O(log n / n) correction is not included.
    """
    BlocklengthParams(n=n, eps=eps)
    if float(rho) < 0.0:
        raise DomainError(f"SNR must be >= 0, got {rho}")
    mom = channel_moments(float(rho), quad)
    rate = mom.capacity - math.sqrt(mom.dispersion) * _backoff(n, eps)
    return min(max(rate, 0.0), 1.0)


def max_rate_db(n: int, rho_db: float, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return max_rate(n, db_to_linear(float(rho_db)), eps, quad)


def required_snr_db(n: int, rate: float, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """SNR in dB at which max_rate equals `rate`."""
    rate = float(rate)
    if not 0.0 < rate < 1.0:
        raise InfeasibleError(f"rate must lie in (0, 1), got {rate}")
    BlocklengthParams(n=n, eps=eps, rate=rate)

    lo, hi = SNR_SEARCH_DB

    def gap(x_db: float) -> float:
        return max_rate_db(n, x_db, eps, quad) - rate

    if gap(hi) < 0.0:
        raise InfeasibleError(f"rate {rate} not reachable below {hi} dB at n={n}, eps={eps}")
    if gap(lo) >= 0.0:
        return lo

    root = brentq(gap, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=300)
    logger.debug("required_snr n=%s rate=%s eps=%s -> %.9f dB", n, rate, eps, root)
    return float(root)


def required_snr(n: int, rate: float, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Linear SNR inverse of max_rate."""
    return db_to_linear(required_snr_db(n, rate, eps, quad))


# -------------------------
# Inflection
# -------------------------

def rate_curvature_db(
    n: int,
    rho_db,
    eps: float,
    step_db: float = INFLECTION_STEP_DB,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> np.ndarray:
    """Central second difference of max_rate with respect to SNR in dB."""
    x = np.atleast_1d(np.asarray(rho_db, dtype=float))
    stacked = np.concatenate([x - step_db, x, x + step_db])
    r = max_rate_curve_db(n, stacked, eps, quad)
    lo, mid, hi = np.split(r, 3)
    return (hi - 2.0 * mid + lo) / (step_db * step_db)


def inflection_snr_db(
    n: int,
    eps: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    window_db: tuple[float, float] = INFLECTION_WINDOW_DB,
) -> float:
    """
    SNR (dB) where max_rate switches from convex to concave.

    The window is scanned at the difference step; the first sign change
    between the curvature peak and the curvature trough is then bisected.
    """
    BlocklengthParams(n=n, eps=eps)
    h = INFLECTION_STEP_DB
    lo, hi = window_db
    count = int(round((hi - lo) / h)) + 1
    grid = lo + h * np.arange(count)

    r = max_rate_curve_db(n, np.concatenate([[lo - h], grid, [hi + h]]), eps, quad)
    curvature = (r[2:] - 2.0 * r[1:-1] + r[:-2]) / (h * h)

    peak = int(np.argmax(curvature))
    if curvature[peak] <= 0.0:
        raise NotFoundError(f"max_rate has no convex part in [{lo}, {hi}] dB")
    trough = peak + int(np.argmin(curvature[peak:]))
    if curvature[trough] >= 0.0:
        raise NotFoundError(f"max_rate has no concave part in [{lo}, {hi}] dB")

    after = np.nonzero(curvature[peak:trough + 1] < 0.0)[0]
    j = peak + int(after[0])
    a, b = float(grid[j - 1]), float(grid[j])

    while b - a > INFLECTION_TOL_DB:
        mid = 0.5 * (a + b)
        if float(rate_curvature_db(n, mid, eps, h, quad)[0]) > 0.0:
            a = mid
        else:
            b = mid

    result = 0.5 * (a + b)
    logger.debug("inflection n=%s eps=%s at %.4f dB", n, eps, result)
    return result


def inflection_snr(n: int, eps: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Linear-SNR form of inflection_snr_db."""
    return db_to_linear(inflection_snr_db(n, eps, quad))


def bounds_table(n: int, eps: float, snr_db, quad: QuadratureSpec = DEFAULT_QUAD) -> list[tuple[float, float, float, float]]:
    """Rows (snr_db, capacity, dispersion, rate) for the `bounds` export."""
    BlocklengthParams(n=n, eps=eps)
    x = np.atleast_1d(np.asarray(snr_db, dtype=float))
    rho = np.atleast_1d(db_to_linear(x))
    cap, disp = channel_moments_array(rho, quad)
    rate = np.clip(cap - np.sqrt(disp) * _backoff(n, eps), 0.0, 1.0)
    return [(float(a), float(c), float(v), float(r)) for a, c, v, r in zip(x, cap, disp, rate)]


__all__ = [
    "LOG2E",
    "bounds_table",
    "channel_moments",
    "channel_moments_array",
    "inflection_snr",
    "inflection_snr_db",
    "max_rate",
    "max_rate_curve",
    "max_rate_curve_db",
    "max_rate_db",
    "q_function",
    "q_inv",
    "rate_curvature_db",
    "required_snr",
    "required_snr_db",
]
