from __future__ import annotations

import logging
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any, AsyncIterator, Iterable, Sequence

import aiosqlite

from src.domain.errors import StoreError

logger = logging.getLogger(__name__)


class Database:
    """
    Async SQLite handle for the results store.

    - One connection per CLI run
    - WAL so a second run can read while a campaign writes
    - aiosqlite errors surface as StoreError
    """

    def __init__(self, db_path: Path) -> None:
        self._db_path = Path(db_path)
        self._conn: aiosqlite.Connection | None = None

    @property
    def conn(self) -> aiosqlite.Connection:
        if not self._conn:
            raise StoreError("results store is not open; call connect() first")
        return self._conn

    async def __aenter__(self) -> "Database":
        await self.connect()
        return self

    async def __aexit__(self, *exc_info: object) -> None:
        await self.close()

    async def connect(self) -> None:
        if self._conn is not None:
            return

        logger.info("Opening results store: %s", self._db_path)
        try:
            self._conn = await aiosqlite.connect(self._db_path.as_posix())
            # row["column"] access in the repositories
            self._conn.row_factory = aiosqlite.Row
            await self._conn.execute("PRAGMA journal_mode = WAL;")
            await self._conn.execute("PRAGMA synchronous = NORMAL;")
            await self._conn.execute("PRAGMA busy_timeout = 5000;")  # ms
            await self._conn.commit()
        except aiosqlite.Error as exc:
            raise StoreError(f"cannot open results store {self._db_path}: {exc}") from exc

    async def close(self) -> None:
        if self._conn is None:
            return
        logger.debug("Closing results store")
        await self._conn.close()
        self._conn = None

    async def execute(self, sql: str, params: Sequence[Any] | None = None) -> None:
        """
        Execute a statement and commit immediately.
        Use transaction() for batching multiple statements.
        """
        try:
            await self.conn.execute(sql, params or ())
            await self.conn.commit()
        except aiosqlite.Error as exc:
            raise StoreError(str(exc)) from exc

    async def executemany(self, sql: str, seq_of_params: Iterable[Sequence[Any]]) -> None:
        try:
            await self.conn.executemany(sql, seq_of_params)
            await self.conn.commit()
        except aiosqlite.Error as exc:
            raise StoreError(str(exc)) from exc

    async def fetchone(self, sql: str, params: Sequence[Any] | None = None) -> aiosqlite.Row | None:
        try:
            async with self.conn.execute(sql, params or ()) as cursor:
                return await cursor.fetchone()
        except aiosqlite.Error as exc:
            raise StoreError(str(exc)) from exc

    async def fetchall(self, sql: str, params: Sequence[Any] | None = None) -> list[aiosqlite.Row]:
        try:
            async with self.conn.execute(sql, params or ()) as cursor:
                return list(await cursor.fetchall())
        except aiosqlite.Error as exc:
            raise StoreError(str(exc)) from exc

    @asynccontextmanager
    async def transaction(self) -> AsyncIterator[aiosqlite.Connection]:
        """Commit on success, roll back on any exception."""
        try:
            await self.conn.execute("BEGIN;")
            yield self.conn
        except Exception:
            await self.conn.rollback()
            raise
        else:
            await self.conn.commit()
