"""Process-pool fan-out for independent simulations and runs.

The degree of parallelism comes from ``WAREHOUSE_JOBS`` (default 1, i.e. run
inline). Results never depend on it: every task carries its own seed.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from .domain import Layout, WarehouseConfig

ENV_JOBS = "WAREHOUSE_JOBS"

T = TypeVar("T")
R = TypeVar("R")


def job_count() -> int:
    raw = os.environ.get(ENV_JOBS, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{ENV_JOBS} must be an integer, got {raw!r}") from None


def _sim_task(args):
    from .simulator import run

    cfg, layout, seed = args
    return run(cfg, layout, seed)


def map_simulations(cfg: WarehouseConfig, layouts: Sequence[Layout], seeds: Sequence[int], jobs: int):
    tasks = [(cfg, l, s) for l, s in zip(layouts, seeds)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sim_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def map_ordered(fn: Callable[[T], R], items: Iterable[T], jobs: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, in order, optionally across processes."""
    items = list(items)
    jobs = job_count() if jobs is None else jobs
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
