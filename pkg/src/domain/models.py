from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Literal

import numpy as np

from src.domain.errors import DomainError, ValidationError


# -------------------------
# Finite-blocklength bounds
# -------------------------

@dataclass(frozen=True)
class BlocklengthParams:
    """
    Blocklength n (channel uses), target CEP eps and rate in bits/use.
    """
    n: int
    eps: float
    rate: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise DomainError(f"blocklength must be >= 1, got {self.n}")
        if not 0.0 < float(self.eps) < 0.5:
            raise DomainError(f"eps must lie in (0, 0.5), got {self.eps}")
        if not 0.0 <= float(self.rate) <= 1.0:
            raise DomainError(f"rate must lie in [0, 1], got {self.rate}")


@dataclass(frozen=True)
class ChannelMoments:
    capacity: float     # bits/use, [0, 1]
    dispersion: float   # bits^2/use, >= 0


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Gauss-Hermite (probabilists' weight) order plus the doubling check:
    a value is accepted once order N and 2N agree to `tol`.
    """
    order: int = 64
    tol: float = 1e-9
    max_order: int = 1024

    def __post_init__(self) -> None:
        if int(self.order) < 16:
            raise DomainError(f"quadrature order must be >= 16, got {self.order}")
        if int(self.max_order) < 2 * int(self.order):
            raise DomainError("max_order must allow at least one doubling")


# -------------------------
# Codes
# -------------------------

@dataclass(frozen=True, eq=False)
class FieldTables:
    """
    GF(2^m) in log/antilog form. antilog[i] = alpha^i for 0 <= i < 2^m - 1,
    log[x] is defined for nonzero x (log[0] is a sentinel -1).
    """
    m: int
    primitive_poly: int
    log: np.ndarray
    antilog: np.ndarray

    @property
    def order(self) -> int:
        return (1 << self.m) - 1

    def mul(self, x: int, y: int) -> int:
        if x == 0 or y == 0:
            return 0
        return int(self.antilog[(int(self.log[x]) + int(self.log[y])) % self.order])

    def power(self, i: int) -> int:
        return int(self.antilog[i % self.order])


@dataclass(frozen=True)
class CodeParent:
    """Provenance of a constructed code (BCH over GF(2^m))."""
    m: int
    t_design: int
    extended: bool


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """
    Binary linear (n, k) code. `generator` holds the k rows of G packed into
    little-endian 64-bit words: bit j of a row lives in word j // 64 at
    position j % 64.
    """
    n: int
    k: int
    generator: np.ndarray
    parent: CodeParent | None = None

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def words(self) -> int:
        return int(self.generator.shape[1])

    @cached_property
    def matrix(self) -> np.ndarray:
        """Unpacked k x n generator over {0, 1} (uint8)."""
        from src.link.gf2 import unpack_rows

        return unpack_rows(self.generator, self.n)

    @cached_property
    def digest(self) -> str:
        """Stable identity of the generator (used as a results-store key)."""
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.n}:{self.k}:".encode())
        h.update(np.ascontiguousarray(self.generator, dtype="<u8").tobytes())
        return h.hexdigest()[:16]


# -------------------------
# Order-statistics decoding
# -------------------------

Metric = Literal["correlation", "hamming"]


@dataclass(frozen=True)
class DecoderConfig:
    """
    Order s and the quantisation width q used only by the K(D) formula.
    `metric` selects the soft correlation discrepancy (default) or the
    literal Hamming distance to the hard decisions; `fast` skips TEPs that
    cannot beat the order-0 candidate.
    """
    s: int
    q: int = 8
    metric: Metric = "correlation"
    fast: bool = False

    def __post_init__(self) -> None:
        if int(self.s) < 0:
            raise DomainError(f"order must be >= 0, got {self.s}")
        if int(self.q) < 1:
            raise DomainError(f"quantisation bits must be >= 1, got {self.q}")
        if self.metric not in ("correlation", "hamming"):
            raise ValidationError(f"unknown discrepancy metric: {self.metric}")


@dataclass(frozen=True, eq=False)
class MostReliableBasis:
    permutation: np.ndarray   # position i of the permuted word is original index permutation[i]
    g_sys: np.ndarray         # k x n uint8, identity on the first k columns
    swap_count: int


@dataclass(frozen=True)
class OperationTally:
    """Binary-operation counts of a single decode, split by phase."""
    sort: float = 0.0
    elimination: float = 0.0
    reprocessing: float = 0.0

    @property
    def total(self) -> float:
        return self.sort + self.elimination + self.reprocessing


@dataclass(frozen=True, eq=False)
class Decoded:
    message: np.ndarray       # k bits
    codeword: np.ndarray      # n bits, original order
    discrepancy: float
    ops: OperationTally = field(default_factory=OperationTally)


@dataclass(frozen=True)
class CepEstimate:
    errors: int
    trials: int
    cep: float
    ci_low: float
    ci_high: float
    snr_db: float | None = None
    order: int | None = None


# -------------------------
# Trade-off law and constraints
# -------------------------

@dataclass(frozen=True)
class ConstraintSet:
    """
    Full URLLC constraint vector: latency deadline L_m, target CEP eps_m,
    symbol time T_s, time per binary operation T_b, minimum rate r_m and
    SNR budget rho_m_db.
    """
    L_m: float
    eps_m: float
    T_s: float
    T_b: float
    r_m: float = 0.0
    rho_m_db: float = 30.0

    def __post_init__(self) -> None:
        for name in ("L_m", "T_s", "T_b"):
            if not float(getattr(self, name)) > 0.0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < float(self.eps_m) < 0.5:
            raise DomainError(f"eps_m must lie in (0, 0.5), got {self.eps_m}")
        if not 0.0 <= float(self.r_m) < 1.0:
            raise DomainError(f"r_m must lie in [0, 1), got {self.r_m}")

    def with_processor(self, T_b: float) -> "ConstraintSet":
        return ConstraintSet(
            L_m=self.L_m,
            eps_m=self.eps_m,
            T_s=self.T_s,
            T_b=float(T_b),
            r_m=self.r_m,
            rho_m_db=self.rho_m_db,
        )


@dataclass(frozen=True)
class TradeoffModel:
    """F(delta_rho) = (a * sqrt(delta_rho) + b)^-1, delta_rho in dB."""
    a: float
    b: float
    fit_residual: float = 0.0

    def __post_init__(self) -> None:
        if not (float(self.a) > 0.0 and float(self.b) > 0.0):
            raise DomainError(f"model constants must be positive, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class GapPoint:
    delta_rho_db: float
    log2_K: float
    order: int | None = None

    def __post_init__(self) -> None:
        if float(self.delta_rho_db) < 0.0:
            raise DomainError(f"power penalty must be >= 0, got {self.delta_rho_db}")
        if not float(self.log2_K) > 0.0:
            raise DomainError(f"log2 complexity must be > 0, got {self.log2_K}")


# -------------------------
# Multi-objective optimization
# -------------------------

@dataclass(frozen=True)
class ReferencePair:
    """{r_s, rho_s}: the rate and the SNR that reaches it without constraints."""
    n: int
    r_s: float
    rho_s_db: float
    eps_m: float


@dataclass(frozen=True)
class ParetoPoint:
    delta_r: float
    delta_rho_db: float
    rate: float
    snr_db: float


@dataclass(frozen=True)
class ParetoBoundary:
    """
    Boundary of the attainable set, ordered by delta_rho ascending.
    `delta_rho_s_min` may be math.inf when rate r_s never fits the deadline.
    """
    ref: ReferencePair
    points: tuple[ParetoPoint, ...]
    delta_rho_s_min: float
    delta_r_s_min: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def start(self) -> ParetoPoint:
        return self.points[0]

    @property
    def end(self) -> ParetoPoint:
        return self.points[-1]


@dataclass(frozen=True)
class TransmissionPair:
    rate: float
    snr_db: float
    delta_r: float
    delta_rho_db: float
    index: int = -1    # position on the boundary it was selected from


PowerCostMode = Literal["shannon_log", "raw_db_log"]


@dataclass(frozen=True)
class ScalarizationSpec:
    """
    Weighted l_theta scalarization. theta=math.inf is the weighted
    Chebyshev form, theta=1 the weighted sum.

    Objectives enter as they are unless `normalise` is set, in which case
    each is rescaled to [0, 1] by the ideal and nadir values over the
    boundary being searched.
    """
    theta: float = 1.0
    alpha: float = 0.5
    A: float = 1.0
    B: float = 1.0
    power_cost_mode: PowerCostMode = "shannon_log"
    log_floor_db: float = 1e-3
    normalise: bool = False

    def __post_init__(self) -> None:
        if not float(self.theta) >= 1.0:
            raise DomainError(f"theta must be >= 1, got {self.theta}")
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (float(self.A) > 0.0 and float(self.B) > 0.0):
            raise DomainError("objective weights A and B must be positive")
        if self.power_cost_mode not in ("shannon_log", "raw_db_log"):
            raise ValidationError(f"unknown power cost mode: {self.power_cost_mode}")
        if not float(self.log_floor_db) > 0.0:
            raise DomainError("log floor must be positive")

    def with_alpha(self, alpha: float) -> "ScalarizationSpec":
        return replace(self, alpha=float(alpha))

    def with_theta(self, theta: float) -> "ScalarizationSpec":
        return replace(self, theta=float(theta))


@dataclass(frozen=True)
class ObjectiveBounds:
    """Ideal (best) and nadir (worst) value of each transformed objective."""
    ideal_r: float
    nadir_r: float
    ideal_p: float
    nadir_p: float


RegimeName = Literal["low", "medium", "high"]


@dataclass(frozen=True)
class Regime:
    name: RegimeName
    rho_s_db: float
    rho_i_db: float            # inflection of the maximal rate curve
    rho_i_shifted_db: float    # rho_i + delta_rho_i^min


# -------------------------
# Battery case study
# -------------------------

@dataclass(frozen=True)
class LinkBudget:
    pathloss_ref_db: float = 30.0
    pathloss_exponent: float = 2.0
    noise_dbm: float = -110.0
    distance_m: float = 100.0

    def __post_init__(self) -> None:
        if not float(self.distance_m) >= 1.0:
            raise DomainError(f"distance must be >= 1 m, got {self.distance_m}")
        if not float(self.pathloss_exponent) > 0.0:
            raise DomainError("path-loss exponent must be > 0")


@dataclass(frozen=True)
class BatteryState:
    capacity_joules: float
    remaining_joules: float

    def __post_init__(self) -> None:
        if not float(self.capacity_joules) > 0.0:
            raise DomainError("battery capacity must be > 0")
        if not 0.0 <= float(self.remaining_joules) <= float(self.capacity_joules):
            raise DomainError("remaining energy must lie in [0, capacity]")

    @classmethod
    def full(cls, capacity_wh: float) -> "BatteryState":
        joules = float(capacity_wh) * 3600.0
        return cls(capacity_joules=joules, remaining_joules=joules)

    @property
    def t(self) -> float:
        return self.remaining_joules / self.capacity_joules


Policy = Literal["theta1", "thetainf", "fixed0", "fixed1"]


@dataclass(frozen=True)
class SimStep:
    """
    One log row: a run of `codewords` consecutive transmissions that all
    selected the same pair. `t` and `alpha` are taken at the start of the run.
    """
    t: float
    alpha: float
    rate: float
    snr_db: float
    delta_r: float
    energy_j: float
    codewords: int


@dataclass(frozen=True)
class SimResult:
    """
    Outcome of one battery drain. `steps` holds runs of identical
    selections; the weight scales are kept so the runs can be expanded
    into per-codeword rows.
    """
    policy: str
    n: int
    r_s: float
    total_transmissions: int
    total_info_bits: float
    steps: tuple[SimStep, ...]
    efficiency_bits_per_joule: float
    remaining_joules: float
    capacity_joules: float
    alpha_scale: str = "formula"
    t_scale: str = "fraction"

    @property
    def energy_used_j(self) -> float:
        return math.fsum(s.energy_j for s in self.steps)
