from __future__ import annotations

import math

import numpy as np

from src.domain.errors import ValidationError


def parse_grid(raw: str) -> np.ndarray:
    """
    Parse `start:step:stop` (inclusive of stop, up to rounding) or a comma
    list `v1,v2,...` into a float array.
    """
    text = raw.strip()
    if not text:
        raise ValidationError("empty grid")

    if ":" not in text:
        try:
            values = [float(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise ValidationError(f"bad grid value in {raw!r}") from exc
        if not values:
            raise ValidationError("empty grid")
        return np.asarray(values, dtype=float)

    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must be start:step:stop, got {raw!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"bad grid {raw!r}") from exc
    if not step > 0.0:
        raise ValidationError(f"grid step must be > 0, got {step}")
    if stop < start:
        raise ValidationError(f"grid stop {stop} is below start {start}")

    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps 0.1-style steps from printing as 0.30000000000000004
    return np.round(start + step * np.arange(count), 12)
