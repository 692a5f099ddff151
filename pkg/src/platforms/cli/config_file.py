from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, TypeVar

from dotenv import dotenv_values

from src.config.presets import DEFAULT_LINK, MODEL_PRESETS, URLLC_CONSTRAINTS
from src.domain.errors import ValidationError
from src.domain.models import ConstraintSet, LinkBudget, TradeoffModel

logger = logging.getLogger(__name__)

T = TypeVar("T")

KNOWN_KEYS = frozenset(
    {
        "n", "eps_m", "L_m", "T_s", "T_b", "r_m", "rho_m_db",
        "model", "a", "b", "code", "seed", "threads",
        "theta", "alpha_scale", "t_scale", "power_cost_mode", "grid_step_db",
        "capacity_wh", "pathloss_ref_db", "pathloss_exponent", "noise_dbm", "distance_m",
    }
)


def parse_theta(raw: str | float) -> float:
    text = str(raw).strip().lower()
    if text in ("inf", "infinity", "∞"):
        return math.inf
    try:
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"theta must be a number or 'inf', got {raw!r}") from exc


@dataclass
class ExperimentConfig:
    """
    Flat `key = value` experiment file merged with command-line overrides.

    Lookups go: override, then file value, then the caller's default.
    Every value actually used is recorded so it can be echoed into the
    CSV header.
    """

    values: Mapping[str, str] = field(default_factory=dict)
    overrides: Mapping[str, Any] = field(default_factory=dict)
    source: Path | None = None
    used: dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def load(cls, path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> "ExperimentConfig":
        values: dict[str, str] = {}
        source = None
        if path is not None:
            source = Path(path)
            if not source.is_file():
                raise FileNotFoundError(f"config file not found: {source}")
            raw = dotenv_values(source)
            unknown = sorted(set(raw) - KNOWN_KEYS)
            if unknown:
                raise ValidationError(f"unknown config keys in {source}: {', '.join(unknown)}")
            values = {k: v for k, v in raw.items() if v is not None and v != ""}
            logger.debug("loaded %s keys from %s", len(values), source)

        clean = {k: v for k, v in (overrides or {}).items() if v is not None}
        return cls(values=values, overrides=clean, source=source)

    def get(self, key: str, cast: Callable[[Any], T], default: T | None = None, *, required: bool = False, record: bool = True) -> T | None:
        if key in self.overrides:
            raw: Any = self.overrides[key]
        elif key in self.values:
            raw = self.values[key]
        elif required:
            raise ValidationError(f"'{key}' is required (flag or config file)")
        else:
            if record:
                self.used[key] = default
            return default

        try:
            value = cast(raw)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad value for '{key}': {raw!r}") from exc
        if record:
            self.used[key] = value
        return value

    def note(self, key: str, value: Any) -> None:
        """Record a command-line value that is not a config key (grids, orders)."""
        self.used[key] = value

    # ---- typed bundles ----

    def constraints(self) -> ConstraintSet:
        base = URLLC_CONSTRAINTS
        return ConstraintSet(
            L_m=self.get("L_m", float, base.L_m),
            eps_m=self.get("eps_m", float, base.eps_m),
            T_s=self.get("T_s", float, base.T_s),
            T_b=self.get("T_b", float, base.T_b),
            r_m=self.get("r_m", float, base.r_m),
            rho_m_db=self.get("rho_m_db", float, base.rho_m_db),
        )

    def model(self) -> TradeoffModel:
        from src.services.tradeoff import read_model

        a = self.get("a", float, None)
        b = self.get("b", float, None)
        if a is not None or b is not None:
            if a is None or b is None:
                raise ValidationError("give both 'a' and 'b' or neither")
            return TradeoffModel(a=a, b=b)

        name = self.get("model", str, "ebch128")
        if name in MODEL_PRESETS:
            return MODEL_PRESETS[name]
        return read_model(name)

    def link(self) -> LinkBudget:
        base = DEFAULT_LINK
        return LinkBudget(
            pathloss_ref_db=self.get("pathloss_ref_db", float, base.pathloss_ref_db),
            pathloss_exponent=self.get("pathloss_exponent", float, base.pathloss_exponent),
            noise_dbm=self.get("noise_dbm", float, base.noise_dbm),
            distance_m=self.get("distance_m", float, base.distance_m),
        )

    def echo(self) -> list[str]:
        """`key = value` lines of every value read so far, sorted by key."""
        lines = []
        for key in sorted(self.used):
            value = self.used[key]
            if isinstance(value, float):
                value = f"{value:.12g}"
            lines.append(f"{key} = {value}")
        return lines


__all__ = ["ExperimentConfig", "KNOWN_KEYS", "parse_theta"]
