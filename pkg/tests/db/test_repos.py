import pytest

from src.db.connection import Database
from src.db.migrations import MIGRATIONS, run_migrations
from src.db.repo.cep_repo import CepRunsRepository
from src.db.repo.gap_repo import GapPointsRepository
from src.domain.errors import StoreError
from src.domain.models import CepEstimate, DecoderConfig, GapPoint
from src.link.codec import bch_code


@pytest.fixture
async def db(tmp_path):
    async with Database(tmp_path / "results.sqlite") as database:
        await run_migrations(database)
        yield database


@pytest.fixture(scope="module")
def code():
    return bch_code(3, 1)


async def test_migrations_are_recorded_once(db):
    await run_migrations(db)
    rows = await db.fetchall("SELECT version FROM schema_migrations ORDER BY version;")
    assert [r["version"] for r in rows] == [v for v, _ in MIGRATIONS]


async def test_closed_store_raises(tmp_path):
    database = Database(tmp_path / "x.sqlite")
    with pytest.raises(StoreError):
        await database.fetchone("SELECT 1;")


async def test_cep_runs_round_trip(db, code):
    repo = CepRunsRepository(db)
    config = DecoderConfig(s=1)
    keys = dict(code=code, config=config, max_trials=1000, target_errors=50, seed=3)
    est = CepEstimate(errors=12, trials=1000, cep=0.012, ci_low=0.0069, ci_high=0.0209, snr_db=2.0, order=1)

    assert await repo.get(snr_db=2.0, **keys) is None
    await repo.save(estimate=est, **keys)
    assert await repo.get(snr_db=2.0, **keys) == est

    # any differing key is a miss
    assert await repo.get(snr_db=2.5, **keys) is None
    assert await repo.get(snr_db=2.0, **{**keys, "seed": 4}) is None
    assert await repo.get(snr_db=2.0, **{**keys, "config": DecoderConfig(s=1, metric="hamming")}) is None


async def test_cep_runs_upsert(db, code):
    repo = CepRunsRepository(db)
    keys = dict(code=code, config=DecoderConfig(s=0), max_trials=500, target_errors=0, seed=1)
    await repo.save(estimate=CepEstimate(5, 500, 0.01, 0.004, 0.023, snr_db=1.0, order=0), **keys)
    await repo.save(estimate=CepEstimate(6, 500, 0.012, 0.005, 0.026, snr_db=1.0, order=0), **keys)
    got = await repo.get(snr_db=1.0, **keys)
    assert got.errors == 6
    rows = await db.fetchall("SELECT id FROM cep_runs;")
    assert len(rows) == 1


async def test_gap_points_list_and_upsert(db, code):
    repo = GapPointsRepository(db)
    await repo.save(code=code, point=GapPoint(2.0, 11.0, order=1), eps_target=1e-3, seed=1)
    await repo.save(code=code, point=GapPoint(3.0, 10.0, order=0), eps_target=1e-3, seed=1)
    await repo.save(code=code, point=GapPoint(1.0, 12.0, order=2), eps_target=1e-2, seed=1)
    await repo.save(code=code, point=GapPoint(2.5, 11.0, order=1), eps_target=1e-3, seed=1)

    points = await repo.list_for_code(code_digest=code.digest, eps_target=1e-3)
    assert [p.order for p in points] == [0, 1]
    assert points[1].delta_rho_db == 2.5

    everything = await repo.list_for_code(code_digest=code.digest)
    assert len(everything) == 3
    assert await repo.list_for_code(code_digest="missing") == []


async def test_gap_points_save_many(db, code):
    repo = GapPointsRepository(db)
    points = [GapPoint(3.0, 10.0, order=0), GapPoint(2.0, 11.0, order=1), GapPoint(1.5, 12.0)]
    assert await repo.save_many(code=code, points=points, eps_target=1e-3, seed=2) == 3
    assert await repo.save_many(code=code, points=[], eps_target=1e-3, seed=2) == 0

    stored = await repo.list_for_code(code_digest=code.digest, eps_target=1e-3)
    assert [p.order for p in stored] == [None, 0, 1]
    assert stored[0].delta_rho_db == 1.5
