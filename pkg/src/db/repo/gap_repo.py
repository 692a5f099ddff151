from __future__ import annotations

from typing import Iterable

from src.db.connection import Database
from src.domain.models import CodeSpec, GapPoint

_UPSERT = """
    INSERT INTO gap_points (code_digest, decoder_order, eps_target, delta_rho_db, log2_k, seed)
    VALUES (?, ?, ?, ?, ?, ?)
    ON CONFLICT(code_digest, decoder_order, eps_target, seed)
    DO UPDATE SET delta_rho_db = excluded.delta_rho_db, log2_k = excluded.log2_k,
                  created_at = datetime('now')
"""

# decoder_order is NOT NULL; points fitted from a CSV carry no order
_NO_ORDER = -1


class GapPointsRepository:
    """Measured (power penalty, log2 complexity) pairs, the input of fit-model --db."""

    def __init__(self, db: Database) -> None:
        self._db = db

    @staticmethod
    def _row(code: CodeSpec, point: GapPoint, eps_target: float, seed: int) -> tuple:
        return (
            code.digest,
            _NO_ORDER if point.order is None else int(point.order),
            float(eps_target),
            point.delta_rho_db,
            point.log2_K,
            int(seed),
        )

    async def save(self, *, code: CodeSpec, point: GapPoint, eps_target: float, seed: int) -> None:
        await self._db.execute(_UPSERT, self._row(code, point, eps_target, seed))

    async def save_many(self, *, code: CodeSpec, points: Iterable[GapPoint], eps_target: float, seed: int) -> int:
        """One commit for a whole campaign; returns the number of rows written."""
        rows = [self._row(code, p, eps_target, seed) for p in points]
        if rows:
            await self._db.executemany(_UPSERT, rows)
        return len(rows)

    async def list_for_code(self, *, code_digest: str, eps_target: float | None = None) -> list[GapPoint]:
        sql = "SELECT decoder_order, delta_rho_db, log2_k FROM gap_points WHERE code_digest = ?"
        params: list = [code_digest]
        if eps_target is not None:
            sql += " AND eps_target = ?"
            params.append(float(eps_target))
        rows = await self._db.fetchall(sql + " ORDER BY decoder_order ASC, id ASC", params)
        return [
            GapPoint(
                delta_rho_db=float(r["delta_rho_db"]),
                log2_K=float(r["log2_k"]),
                order=None if int(r["decoder_order"]) == _NO_ORDER else int(r["decoder_order"]),
            )
            for r in rows
        ]
