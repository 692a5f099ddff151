from __future__ import annotations

import logging
from typing import Awaitable, Callable

from src.db.connection import Database

logger = logging.getLogger(__name__)


# -----------------------------
# Migrations
# -----------------------------
async def _migration_v1(conn) -> None:
    # one Monte Carlo CEP point per row; the key is everything that fixes the result
    await conn.execute(
        """
        CREATE TABLE IF NOT EXISTS cep_runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            code_digest TEXT NOT NULL,
            n INTEGER NOT NULL,
            k INTEGER NOT NULL,
            decoder_order INTEGER NOT NULL,
            q INTEGER NOT NULL,
            metric TEXT NOT NULL,
            snr_db REAL NOT NULL,
            max_trials INTEGER NOT NULL,
            target_errors INTEGER NOT NULL,
            seed INTEGER NOT NULL,
            errors INTEGER NOT NULL,
            trials INTEGER NOT NULL,
            cep REAL NOT NULL,
            ci_low REAL NOT NULL,
            ci_high REAL NOT NULL,
            created_at TEXT NOT NULL DEFAULT (datetime('now')),
            UNIQUE(code_digest, decoder_order, q, metric, snr_db, max_trials, target_errors, seed)
        );
        """
    )


async def _migration_v2(conn) -> None:
    await conn.execute(
        """
        CREATE TABLE IF NOT EXISTS gap_points (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            code_digest TEXT NOT NULL,
            decoder_order INTEGER NOT NULL,
            eps_target REAL NOT NULL,
            delta_rho_db REAL NOT NULL,
            log2_k REAL NOT NULL,
            seed INTEGER NOT NULL,
            created_at TEXT NOT NULL DEFAULT (datetime('now')),
            UNIQUE(code_digest, decoder_order, eps_target, seed)
        );
        """
    )
    await conn.execute(
        "CREATE INDEX IF NOT EXISTS idx_gap_points_code ON gap_points(code_digest, eps_target);"
    )


MIGRATIONS: list[tuple[int, Callable[..., Awaitable[None]]]] = [
    (1, _migration_v1),
    (2, _migration_v2),
]


async def run_migrations(db: Database) -> None:
    logger.debug("Running results-store migrations (if needed)")

    async with db.transaction() as conn:
        await conn.execute(
            """
            CREATE TABLE IF NOT EXISTS schema_migrations (
                version INTEGER PRIMARY KEY,
                applied_at TEXT NOT NULL DEFAULT (datetime('now'))
            );
            """
        )

        cursor = await conn.execute("SELECT MAX(version) AS v FROM schema_migrations;")
        row = await cursor.fetchone()
        current_version = int(row["v"]) if row and row["v"] is not None else 0

        for version, fn in MIGRATIONS:
            if version <= current_version:
                continue
            logger.info("Applying results-store migration v%s", version)
            await fn(conn)
            await conn.execute(
                "INSERT INTO schema_migrations (version) VALUES (?);",
                (version,),
            )
