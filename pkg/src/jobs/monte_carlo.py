from __future__ import annotations

# src/jobs/monte_carlo.py
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

from src.domain.errors import ValidationError

log = logging.getLogger("jobs.monte_carlo")

DEFAULT_BATCH_SIZE = 500


# =======================================================
# BATCHED TRIAL RUNNER
# Trials are split into fixed-size batches [start, stop).
# Batches are merged strictly in order and the run stops at the
# first batch boundary where `enough(errors)` holds, so the totals
# do not depend on the worker count.
# =======================================================

@dataclass(frozen=True)
class BatchTotals:
    errors: int
    trials: int
    batches: int


def plan_batches(total: int, batch_size: int) -> list[tuple[int, int]]:
    if int(total) < 1:
        raise ValidationError(f"trial count must be >= 1, got {total}")
    if int(batch_size) < 1:
        raise ValidationError(f"batch size must be >= 1, got {batch_size}")
    return [(s, min(s + batch_size, total)) for s in range(0, total, batch_size)]


def run_batches(
    task: Callable[[int, int], int],
    *,
    total: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
    threads: int = 1,
    enough: Callable[[int], bool] | None = None,
) -> BatchTotals:
    """
    Run `task(start, stop) -> error count` over all batches.

    With threads > 1 the task is shipped to a process pool, so it must be
    picklable (a module-level function or a functools.partial of one).
    """
    batches = plan_batches(total, batch_size)
    stop_now = enough or (lambda _errors: False)

    errors = 0
    trials = 0
    used = 0

    if threads <= 1:
        for start, stop in batches:
            errors += int(task(start, stop))
            trials += stop - start
            used += 1
            if stop_now(errors):
                break
        return BatchTotals(errors=errors, trials=trials, batches=used)

    with ProcessPoolExecutor(max_workers=threads) as pool:
        i = 0
        finished = False
        while i < len(batches) and not finished:
            window = batches[i:i + threads]
            futures = [pool.submit(task, start, stop) for start, stop in window]
            for (start, stop), fut in zip(window, futures):
                if finished:
                    fut.cancel()
                    continue
                errors += int(fut.result())
                trials += stop - start
                used += 1
                if stop_now(errors):
                    finished = True
            i += threads

    log.debug("merged %s batches: %s errors in %s trials", used, errors, trials)
    return BatchTotals(errors=errors, trials=trials, batches=used)
