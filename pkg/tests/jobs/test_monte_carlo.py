import pytest

from src.domain.errors import ValidationError
from src.jobs.monte_carlo import plan_batches, run_batches


def count_even(start: int, stop: int) -> int:
    return sum(1 for i in range(start, stop) if i % 2 == 0)


def test_plan_batches_covers_range():
    assert plan_batches(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert plan_batches(3, 10) == [(0, 3)]


@pytest.mark.parametrize("total, size", [(0, 5), (5, 0)])
def test_plan_batches_rejects_empty(total, size):
    with pytest.raises(ValidationError):
        plan_batches(total, size)


def test_run_batches_full_run():
    totals = run_batches(count_even, total=101, batch_size=10)
    assert totals.errors == 51
    assert totals.trials == 101
    assert totals.batches == 11


def test_run_batches_stops_at_boundary():
    totals = run_batches(count_even, total=1000, batch_size=10, enough=lambda e: e >= 12)
    # 5 per batch: the third batch crosses 12
    assert totals.errors == 15
    assert totals.trials == 30
    assert totals.batches == 3


def test_run_batches_pool_matches_serial():
    serial = run_batches(count_even, total=1000, batch_size=10, enough=lambda e: e >= 42)
    pooled = run_batches(count_even, total=1000, batch_size=10, threads=3, enough=lambda e: e >= 42)
    assert pooled == serial
