"""Independent replications, serial or in a process pool.

Each replication owns its engine and random streams (derived from the seed
and its replication index), and results are always returned in replication
order, so the number of workers never changes the output.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from .errors import InsufficientData
from .metrics import JobSummary, MetricsRecorder, littles_law_check
from .model import StationaryDistribution
from .network import Network, SimConfig

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class ReplicationResult:
    replication: int
    seed: int
    horizon: float
    warmup: float
    occupancy: StationaryDistribution
    summary: JobSummary
    littles_discrepancy: Optional[float]

    @property
    def mean_wait(self) -> float:
        return self.summary.mean_wait


def run_replication(config: SimConfig, horizon: float, *, min_jobs: int = 1000) -> ReplicationResult:
    """One steady-state replication: occupancy, queue-wait and Little's-law statistics."""
    config = replace(config, load_sample_period=None, record_series=False)
    recorder = MetricsRecorder(warmup=config.warmup, keep_jobs=False)
    net = Network(config, recorder)
    net.run(horizon)
    occupancy = net.occupancy()
    try:
        disc = littles_law_check(
            recorder.summary, occupancy, start=config.warmup, end=horizon, min_jobs=min_jobs
        )
    except InsufficientData:
        disc = None
    return ReplicationResult(
        config.replication, config.seed, horizon, config.warmup, occupancy, recorder.summary, disc
    )


def _run_task(task):
    config, horizon = task
    return run_replication(config, horizon)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally spread over processes; order preserved."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_replications(
    config: SimConfig, horizon: float, replications: int, workers: int = 1
) -> list[ReplicationResult]:
    tasks = [(replace(config, replication=i), horizon) for i in range(replications)]
    return parallel_map(_run_task, tasks, workers)


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and its standard error (NaN error for fewer than two values)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
