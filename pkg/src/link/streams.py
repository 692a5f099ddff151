"""
Seeded per-trial random streams.

Every Monte Carlo trial draws from its own counter-based Philox stream,
keyed by (seed, stream, trial), so results do not depend on how trials are
split across workers or batches.
"""

from __future__ import annotations

import numpy as np

from src.domain.errors import ValidationError

# stream ids; one per independent use of randomness inside a trial
MESSAGE_STREAM = 0
NOISE_STREAM = 1


def _check(seed: int, trial: int, stream: int) -> None:
    for name, value in (("seed", seed), ("trial", trial), ("stream", stream)):
        if int(value) < 0:
            raise ValidationError(f"{name} must be >= 0, got {value}")


def trial_generator(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent Generator for one (seed, stream, trial) triple."""
    _check(seed, trial, stream)
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(trial)))
    return np.random.Generator(np.random.Philox(seq))


def noise(seed: int, trial: int, n: int) -> np.ndarray:
    return trial_generator(seed, trial, NOISE_STREAM).standard_normal(int(n))


def message_bits(seed: int, trial: int, k: int) -> np.ndarray:
    return trial_generator(seed, trial, MESSAGE_STREAM).integers(0, 2, size=int(k), dtype=np.uint8)
