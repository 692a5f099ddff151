from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from src.domain.errors import ValidationError


@dataclass(frozen=True)
class Settings:
    """
    Process-wide settings loaded from environment variables.

    Nothing is required: every field has a default so the CLI works in a
    bare shell. Experiment parameters do NOT live here; they come from
    config files and flags (see src.platforms.cli.config_file).
    """

    # Environment
    env: str
    log_level: str

    # Monte Carlo workers
    threads: int

    # Numerics
    quadrature_order: int

    # Optional results store (SQLite)
    results_db: Path | None

    # Where relative output paths are resolved
    output_dir: Path

    @classmethod
    def load(cls) -> "Settings":
        """
        Load settings from environment variables.
        """

        # Load .env for local runs (noop when absent)
        load_dotenv()

        env = os.getenv("ENV", "development")
        log_level = os.getenv("LOG_LEVEL", "INFO")

        def opt_int(name: str, default: int) -> int:
            raw = os.getenv(name, "").strip()
            if not raw:
                return default
            try:
                return int(raw)
            except ValueError as exc:
                raise ValidationError(f"{name} must be an integer, got {raw!r}") from exc

        threads = opt_int("URLLC_THREADS", os.cpu_count() or 1)
        if threads < 1:
            raise ValidationError(f"URLLC_THREADS must be >= 1, got {threads}")

        quadrature_order = opt_int("URLLC_QUAD_ORDER", 64)

        results_db: Path | None = None
        db_raw = os.getenv("URLLC_RESULTS_DB", "").strip()
        if db_raw:
            results_db = Path(db_raw)
            # Ensure parent directory exists
            results_db.parent.mkdir(parents=True, exist_ok=True)

        output_dir = Path(os.getenv("URLLC_OUTPUT_DIR", "."))

        return cls(
            env=env,
            log_level=log_level,
            threads=threads,
            quadrature_order=quadrature_order,
            results_db=results_db,
            output_dir=output_dir,
        )
