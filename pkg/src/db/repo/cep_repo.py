from __future__ import annotations

from typing import Optional

from src.db.connection import Database
from src.domain.models import CepEstimate, CodeSpec, DecoderConfig


class CepRunsRepository:
    """
    Cached Monte Carlo CEP points.

    A row is reused only when every input that fixes the estimate matches
    (code digest, decoder, SNR, trial budget and seed).
    """

    def __init__(self, db: Database) -> None:
        self._db = db

    async def get(
        self,
        *,
        code: CodeSpec,
        config: DecoderConfig,
        snr_db: float,
        max_trials: int,
        target_errors: int,
        seed: int,
    ) -> Optional[CepEstimate]:
        row = await self._db.fetchone(
            """
            SELECT errors, trials, cep, ci_low, ci_high, snr_db, decoder_order
            FROM cep_runs
            WHERE code_digest = ? AND decoder_order = ? AND q = ? AND metric = ?
              AND snr_db = ? AND max_trials = ? AND target_errors = ? AND seed = ?
            """,
            (
                code.digest, int(config.s), int(config.q), config.metric,
                float(snr_db), int(max_trials), int(target_errors), int(seed),
            ),
        )
        if not row:
            return None
        return CepEstimate(
            errors=int(row["errors"]),
            trials=int(row["trials"]),
            cep=float(row["cep"]),
            ci_low=float(row["ci_low"]),
            ci_high=float(row["ci_high"]),
            snr_db=float(row["snr_db"]),
            order=int(row["decoder_order"]),
        )

    async def save(
        self,
        *,
        code: CodeSpec,
        config: DecoderConfig,
        estimate: CepEstimate,
        max_trials: int,
        target_errors: int,
        seed: int,
    ) -> None:
        await self._db.execute(
            """
            INSERT INTO cep_runs (
                code_digest, n, k, decoder_order, q, metric, snr_db,
                max_trials, target_errors, seed, errors, trials, cep, ci_low, ci_high
            )
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            ON CONFLICT(code_digest, decoder_order, q, metric, snr_db, max_trials, target_errors, seed)
            DO UPDATE SET
                errors = excluded.errors,
                trials = excluded.trials,
                cep = excluded.cep,
                ci_low = excluded.ci_low,
                ci_high = excluded.ci_high,
                created_at = datetime('now')
            """,
            (
                code.digest, code.n, code.k, int(config.s), int(config.q), config.metric,
                float(estimate.snr_db if estimate.snr_db is not None else 0.0),
                int(max_trials), int(target_errors), int(seed),
                estimate.errors, estimate.trials, estimate.cep, estimate.ci_low, estimate.ci_high,
            ),
        )
