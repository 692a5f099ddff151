"""
Order-s order-statistics decoding.

Steps per received vector y:
  1. sort positions by |y| (stable, descending)
  2. Gauss-Jordan on the permuted generator; the first k independent
     columns form the most reliable basis (MRB)
  3. hard-decide the MRB bits, flip them with every test error pattern
     (TEP) of weight <= s, re-encode, and keep the candidate with the
     smallest discrepancy to y

Every decode also reports a binary-operation tally following the cost
model behind `complexity_per_info_bit`.
"""

from __future__ import annotations

import itertools
import logging
import math
from functools import lru_cache, partial
from typing import Iterator

import numpy as np
from scipy.stats import norm

from src.domain.errors import CodeFormatError, DomainError, ValidationError
from src.domain.models import (
    CepEstimate,
    CodeSpec,
    Decoded,
    DecoderConfig,
    Metric,
    MostReliableBasis,
    OperationTally,
)
from src.jobs.monte_carlo import DEFAULT_BATCH_SIZE, run_batches
from src.link import streams
from src.link.codec import encode, hard_decision, transmit
from src.link.gf2 import all_messages, codebook, gauss_jordan, mod2_matmul, right_inverse
from src.utils.units import db_to_linear

logger = logging.getLogger(__name__)

# TEPs are re-encoded in blocks of this many patterns
TEP_BLOCK = 4096
# patterns for (k, s) with at most this many TEPs are kept in memory
TEP_CACHE_LIMIT = 1 << 16

CI_LEVEL = 0.95


# -------------------------
# Reliability ordering and MRB
# -------------------------

def reliability_permutation(y) -> np.ndarray:
    """Positions by descending |y|; ties keep the lower original index first."""
    return np.argsort(-np.abs(np.asarray(y, dtype=float)), kind="stable")


def systematize(code: CodeSpec, permutation) -> MostReliableBasis:
    """
    Reduce the column-permuted generator to systematic form on the MRB.

    A column that depends on the more reliable ones is moved behind the
    basis; later (less reliable) independent columns take its place.
    `swap_count` is the number of columns moved that way.
    """
    perm = np.asarray(permutation, dtype=np.int64)
    n, k = code.n, code.k
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValidationError("permutation must be a bijection on the code positions")

    reduced, pivots = gauss_jordan(code.matrix[:, perm], max_pivots=k)
    if len(pivots) != k:
        raise CodeFormatError(f"generator rank {len(pivots)} < k={k}")

    pivot_set = set(pivots)
    order = pivots + [c for c in range(n) if c not in pivot_set]
    swap_count = pivots[-1] + 1 - k

    return MostReliableBasis(
        permutation=perm[order],
        g_sys=np.ascontiguousarray(reduced[:, order]),
        swap_count=int(swap_count),
    )


# -------------------------
# Test error patterns
# -------------------------

def tep_count(k: int, s: int) -> int:
    """|T| = sum_{i<=s} C(k, i), exact (Python ints)."""
    if int(k) < 0 or not 0 <= int(s) <= int(k):
        raise DomainError(f"need 0 <= s <= k, got k={k}, s={s}")
    return sum(math.comb(int(k), i) for i in range(int(s) + 1))


def _tep_rows(k: int, s: int) -> Iterator[tuple[int, ...]]:
    # weight first, then lexicographic over positions
    for weight in range(s + 1):
        yield from itertools.combinations(range(k), weight)


def _block_from(rows: list[tuple[int, ...]], k: int) -> np.ndarray:
    block = np.zeros((len(rows), k), dtype=np.uint8)
    for i, ones in enumerate(rows):
        block[i, list(ones)] = 1
    return block


@lru_cache(maxsize=32)
def _cached_tep_blocks(k: int, s: int) -> tuple[np.ndarray, ...]:
    blocks = tuple(_generate_tep_blocks(k, s))
    for b in blocks:
        b.setflags(write=False)
    return blocks


def _generate_tep_blocks(k: int, s: int) -> Iterator[np.ndarray]:
    rows = _tep_rows(k, s)
    while True:
        chunk = list(itertools.islice(rows, TEP_BLOCK))
        if not chunk:
            return
        yield _block_from(chunk, k)


def tep_blocks(k: int, s: int) -> Iterator[np.ndarray]:
    """All TEPs of weight <= s in enumeration order, as uint8 blocks."""
    if tep_count(k, s) <= TEP_CACHE_LIMIT:
        yield from _cached_tep_blocks(int(k), int(s))
    else:
        yield from _generate_tep_blocks(int(k), int(s))


# -------------------------
# Complexity
# -------------------------

def complexity_per_info_bit(n: int, k: int, s: int, q: int = 8) -> float:
    """K(D) = log2(n)/r + n*k + |T|/2 * (n - q + q*n/k)."""
    if int(k) < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if int(n) < int(k):
        raise DomainError(f"need k <= n, got n={n}, k={k}")
    rate = k / n
    teps = tep_count(k, s)
    return math.log2(n) / rate + n * k + 0.5 * teps * (n - q + q * n / k)


def log2_complexity(n: int, k: int, s: int, q: int = 8) -> float:
    return math.log2(complexity_per_info_bit(n, k, s, q))


# -------------------------
# Decoding
# -------------------------

def _position_costs(abs_y: np.ndarray, metric: Metric) -> np.ndarray:
    if metric == "hamming":
        return np.ones_like(abs_y)
    return abs_y


@lru_cache(maxsize=32)
def _message_map(code: CodeSpec) -> tuple[np.ndarray, np.ndarray]:
    return right_inverse(code.matrix)


def message_from_codeword(code: CodeSpec, codeword) -> np.ndarray:
    info_cols, inverse = _message_map(code)
    return mod2_matmul(np.asarray(codeword, dtype=np.uint8)[info_cols], inverse)


def discrepancy(y, codeword, metric: Metric = "correlation") -> float:
    """Sum of |y_i| (or count) over positions where c_i differs from h(y_i)."""
    y = np.asarray(y, dtype=float)
    wrong = np.asarray(codeword, dtype=np.uint8) != hard_decision(y)
    return float(_position_costs(np.abs(y), metric)[wrong].sum())


def decode(y, code: CodeSpec, config: DecoderConfig) -> Decoded:
    y = np.asarray(y, dtype=float)
    n, k, s = code.n, code.k, int(config.s)
    if y.shape != (n,):
        raise ValidationError(f"received vector length {y.shape} != n={n}")
    if s > k:
        raise DomainError(f"order {s} exceeds k={k}")

    basis = systematize(code, reliability_permutation(y))
    y_perm = y[basis.permutation]
    hard = hard_decision(y_perm)
    cost = _position_costs(np.abs(y_perm), config.metric)
    cost_info = cost[:k]
    hard_info = hard[:k]

    best_disc = math.inf
    best_word: np.ndarray | None = None
    bound = math.inf
    reprocessing = 0.0

    if config.fast:
        # order-0 candidate: the re-encoded hard decisions
        word0 = mod2_matmul(hard_info[None, :], basis.g_sys)[0]
        bound = float(cost[word0 != hard].sum())

    for block in tep_blocks(k, s):
        if config.fast:
            # candidate discrepancy >= cost of the flipped MRB positions
            block = block[(block @ cost_info) < bound]
            if block.shape[0] == 0:
                continue

        info = block ^ hard_info
        words = mod2_matmul(info, basis.g_sys)
        wrong = words != hard
        scores = wrong @ cost

        reprocessing += n * float(info.sum(dtype=np.int64))
        reprocessing += config.q * float(wrong[:, k:].sum(dtype=np.int64))

        j = int(np.argmin(scores))
        if scores[j] < best_disc:
            best_disc = float(scores[j])
            best_word = words[j]

    if best_word is None:
        # fast mode skipped everything: the order-0 candidate is the answer
        best_word = mod2_matmul(hard_info[None, :], basis.g_sys)[0]
        best_disc = float(cost[best_word != hard].sum())

    codeword = np.empty(n, dtype=np.uint8)
    codeword[basis.permutation] = best_word

    ops = OperationTally(
        sort=n * math.log2(n),
        elimination=float(n * k * k),
        reprocessing=reprocessing,
    )
    return Decoded(
        message=message_from_codeword(code, codeword),
        codeword=codeword,
        discrepancy=best_disc,
        ops=ops,
    )


@lru_cache(maxsize=8)
def _codebook(code: CodeSpec) -> np.ndarray:
    words = codebook(code.matrix)
    words.setflags(write=False)
    return words


def ml_decode(y, code: CodeSpec, metric: Metric = "correlation") -> Decoded:
    """Exhaustive minimum-discrepancy decoding over the whole codebook (k <= 16)."""
    y = np.asarray(y, dtype=float)
    if y.shape != (code.n,):
        raise ValidationError(f"received vector length {y.shape} != n={code.n}")

    words = _codebook(code)
    cost = _position_costs(np.abs(y), metric)
    scores = (words != hard_decision(y)) @ cost
    j = int(np.argmin(scores))
    return Decoded(
        message=all_messages(code.k)[j].copy(),
        codeword=words[j].copy(),
        discrepancy=float(scores[j]),
    )


# -------------------------
# Monte Carlo CEP
# -------------------------

def wilson_interval(errors: int, trials: int, level: float = CI_LEVEL) -> tuple[float, float]:
    """Wilson score interval; zero errors give the one-sided [0, 1 - (1-level)^(1/N)]."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if errors == 0:
        return 0.0, 1.0 - (1.0 - level) ** (1.0 / trials)

    z = float(norm.ppf(0.5 + level / 2.0))
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def count_errors(code: CodeSpec, config: DecoderConfig, rho: float, seed: int, start: int, stop: int) -> int:
    """Codeword errors over trials [start, stop); each trial has its own streams."""
    errors = 0
    for trial in range(start, stop):
        message = streams.message_bits(seed, trial, code.k)
        word = encode(code, message)
        y = transmit(word, rho, seed, trial)
        decoded = decode(y, code, config)
        if not np.array_equal(decoded.codeword, word):
            errors += 1
    return errors


def estimate_cep(
    code: CodeSpec,
    config: DecoderConfig,
    rho: float,
    max_trials: int,
    target_errors: int,
    seed: int,
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
    snr_db: float | None = None,
) -> CepEstimate:
    """
    Encode -> transmit -> decode until `target_errors` codeword errors or
    `max_trials`. Stopping is checked only at batch boundaries.
    """
    if int(max_trials) < 1:
        raise ValidationError(f"max_trials must be >= 1, got {max_trials}")

    task = partial(count_errors, code, config, float(rho), int(seed))
    totals = run_batches(
        task,
        total=int(max_trials),
        batch_size=int(batch_size),
        threads=int(threads),
        enough=lambda e: target_errors > 0 and e >= target_errors,
    )
    low, high = wilson_interval(totals.errors, totals.trials)
    est = CepEstimate(
        errors=totals.errors,
        trials=totals.trials,
        cep=totals.errors / totals.trials,
        ci_low=low,
        ci_high=high,
        snr_db=snr_db,
        order=int(config.s),
    )
    logger.info(
        "cep (%s,%s) s=%s snr=%s: %s/%s = %.3g",
        code.n, code.k, config.s, snr_db, est.errors, est.trials, est.cep,
    )
    return est


def cep_curve(
    code: CodeSpec,
    config: DecoderConfig,
    snr_db,
    max_trials: int,
    target_errors: int,
    seed: int,
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> list[CepEstimate]:
    """estimate_cep at each SNR (dB), same seed at every point."""
    return [
        estimate_cep(
            code, config, db_to_linear(float(x)), max_trials, target_errors, seed,
            threads=threads, batch_size=batch_size, snr_db=float(x),
        )
        for x in np.atleast_1d(np.asarray(snr_db, dtype=float))
    ]
