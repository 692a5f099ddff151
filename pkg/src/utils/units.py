from __future__ import annotations

import numpy as np


def db_to_linear(value_db):
    """10^(x/10); accepts scalars or arrays."""
    out = np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(value):
    out = 10.0 * np.log10(np.asarray(value, dtype=float))
    return float(out) if out.ndim == 0 else out


def dbm_to_watts(value_dbm: float) -> float:
    return float(10.0 ** ((float(value_dbm) - 30.0) / 10.0))
