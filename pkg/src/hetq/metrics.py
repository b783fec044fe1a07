"""Per-job records, load samples, windowed traffic intensity and occupancy estimators."""
from __future__ import annotations

import math
from array import array
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateTrace, IncompleteJob, InsufficientData, NonPositiveWindow
from .model import StationaryDistribution, distribution_from_mapping

JOB_COLUMNS = (
    "job_id",
    "client_id",
    "created_at",
    "enqueued_at",
    "dispatched_at",
    "server_id",
    "service_end",
    "response_at",
    "queue_wait",
    "rtt",
    "load_at_enqueue",
)

DEFAULT_SENTINEL_CAP = 1e9


@dataclass(frozen=True)
class LoadSample:
    time: float
    queue_length: int
    jobs_in_system: int


@dataclass(frozen=True)
class TrafficIntensitySample:
    window_end: float
    lambda_hat: float
    mu_hat: float
    rho_hat: float
    sentinel_flag: bool


def sample_load(clock: float, state) -> LoadSample:
    """Snapshot of a dispatcher: jobs waiting, and waiting plus in service."""
    q = len(state.fifo_queue)
    return LoadSample(clock, q, q + state.in_service())


def job_row(job) -> tuple:
    return (
        job.id,
        job.client_id,
        job.created_at,
        job.enqueued_at,
        job.dispatched_at,
        job.server_id,
        job.service_end,
        job.response_at,
        job.queue_wait,
        job.rtt,
        job.load_at_enqueue,
    )


def check_complete(job) -> None:
    stamps = (job.created_at, job.enqueued_at, job.dispatched_at, job.service_end, job.response_at)
    if any(t is None for t in stamps):
        raise IncompleteJob(f"job {job.id} has missing timestamps")
    if not all(a <= b for a, b in zip(stamps, stamps[1:])):
        raise IncompleteJob(f"job {job.id} timestamps out of order: {stamps}")
    if job.server_id not in (1, 2):
        raise IncompleteJob(f"job {job.id} has no server")


@dataclass
class JobSummary:
    """Running sums over jobs that reached the dispatcher at or after ``start``."""

    start: float = 0.0
    count: int = 0
    sum_wait: float = 0.0
    sum_wait_sq: float = 0.0
    sum_sojourn: float = 0.0

    def add(self, job) -> None:
        if job.enqueued_at < self.start:
            return
        w = job.dispatched_at - job.enqueued_at
        self.count += 1
        self.sum_wait += w
        self.sum_wait_sq += w * w
        self.sum_sojourn += job.service_end - job.enqueued_at

    @property
    def mean_wait(self) -> float:
        return self.sum_wait / self.count if self.count else math.nan

    @property
    def mean_sojourn(self) -> float:
        return self.sum_sojourn / self.count if self.count else math.nan

    @classmethod
    def of(cls, jobs: Iterable, start: float = 0.0, end: float = math.inf) -> JobSummary:
        s = cls(start=start)
        for job in jobs:
            if job.service_end is not None and job.service_end <= end:
                s.add(job)
        return s


class MetricsRecorder:
    """Collects what one simulation instance emits.

    Completed jobs go to ``job_sink`` when given (rows are streamed, not kept),
    otherwise into ``jobs`` unless ``keep_jobs`` is False.
    """

    def __init__(
        self,
        warmup: float = 0.0,
        *,
        keep_jobs: bool = True,
        job_sink: Optional[Callable[[tuple], None]] = None,
    ):
        self.warmup = warmup
        self.keep_jobs = keep_jobs and job_sink is None
        self.job_sink = job_sink
        self.jobs: list = []
        self.load: list[LoadSample] = []
        self.arrivals = array("d")
        self.completions = array("d")
        self.summary = JobSummary(start=warmup)
        self.recorded = 0

    def observe_sojourn(self, job) -> None:
        self.summary.add(job)

    def record_job(self, job) -> None:
        check_complete(job)
        self.recorded += 1
        if self.job_sink is not None:
            self.job_sink(job_row(job))
        elif self.keep_jobs:
            self.jobs.append(job)

    def add_load_sample(self, sample: LoadSample) -> None:
        self.load.append(sample)

    def rho_series(self, window: float, t_end: float, sentinel_cap: float = DEFAULT_SENTINEL_CAP):
        return traffic_intensity_series(self.arrivals, self.completions, window, sentinel_cap, t_end=t_end)


def traffic_intensity_series(
    arrival_times: Sequence[float],
    completion_times: Sequence[float],
    window: float,
    sentinel_cap: float = DEFAULT_SENTINEL_CAP,
    *,
    t_end: Optional[float] = None,
) -> list[TrafficIntensitySample]:
    """Arrival/completion rates and their ratio over tumbling windows on [0, t_end].

    A window with arrivals but no completions reports ``sentinel_cap`` and sets
    ``sentinel_flag``; a window without arrivals reports 0.  The last window is
    shortened to end at ``t_end``.
    """
    if not (window > 0):
        raise NonPositiveWindow(f"window must be positive, got {window}")
    arr = np.asarray(arrival_times, dtype=float)
    comp = np.asarray(completion_times, dtype=float)
    if t_end is None:
        t_end = max(arr.max(initial=0.0), comp.max(initial=0.0))
    if t_end <= 0:
        return []
    n = max(1, math.ceil(t_end / window - 1e-9))
    edges = np.arange(n + 1, dtype=float) * window
    edges[-1] = t_end
    a_counts = np.histogram(arr[arr <= t_end], bins=edges)[0]
    c_counts = np.histogram(comp[comp <= t_end], bins=edges)[0]
    out = []
    for k in range(n):
        length = edges[k + 1] - edges[k]
        lam_hat = a_counts[k] / length
        mu_hat = c_counts[k] / length
        if lam_hat == 0:
            rho, flag = 0.0, False
        elif mu_hat == 0:
            rho, flag = sentinel_cap, True
        else:
            rho, flag = lam_hat / mu_hat, False
        out.append(TrafficIntensitySample(float(edges[k + 1]), float(lam_hat), float(mu_hat), float(rho), flag))
    return out


class OccupancyAccumulator:
    """Time spent in each ``(n1, n2)`` label after ``warmup``."""

    __slots__ = ("warmup", "time_in", "_label", "_since", "closed_at")

    def __init__(self, warmup: float = 0.0):
        self.warmup = warmup
        self.time_in: dict[tuple[int, int], float] = {}
        self._label = None
        self._since = 0.0
        self.closed_at = None

    def observe(self, t: float, label: tuple[int, int]) -> None:
        """The system enters ``label`` at time ``t``."""
        if self._label is not None:
            start = self._since if self._since > self.warmup else self.warmup
            if t > start:
                self.time_in[self._label] = self.time_in.get(self._label, 0.0) + (t - start)
        self._label = label
        self._since = t

    def close(self, t_end: float) -> None:
        self.observe(t_end, self._label)
        self.closed_at = t_end

    def distribution(self) -> StationaryDistribution:
        total = math.fsum(self.time_in.values())
        if not total > 0:
            raise DegenerateTrace("no time observed after warmup")
        items = [(k, v / total) for k, v in self.time_in.items()]
        return distribution_from_mapping(items, "simulation-occupancy")

    def mean_in_system(self) -> float:
        total = math.fsum(self.time_in.values())
        return math.fsum((n1 + n2) * v for (n1, n2), v in self.time_in.items()) / total


def occupancy_estimate(
    state_trace: Iterable[tuple[float, tuple[int, int]]], t_end: float, warmup: float = 0.0
) -> StationaryDistribution:
    """Time-weighted fraction of [warmup, t_end] spent in each state.

    ``state_trace`` lists ``(time, (n1, n2))`` entries, each state holding
    until the next entry's time (the last until ``t_end``).
    """
    if t_end <= warmup:
        raise DegenerateTrace(f"t_end={t_end} must exceed warmup={warmup}")
    acc = OccupancyAccumulator(warmup)
    for t, label in state_trace:
        if t > t_end:
            break
        acc.observe(t, tuple(label))
    if acc._label is None:
        raise DegenerateTrace("empty state trace")
    acc.close(t_end)
    return acc.distribution()


def littles_law_check(
    jobs,
    occupancy: StationaryDistribution,
    *,
    start: float,
    end: float,
    min_jobs: int = 1000,
) -> float:
    """``|L - lam*W| / L`` with L from ``occupancy`` and lam, W from ``jobs``.

    ``jobs`` is either an iterable of completed jobs or a :class:`JobSummary`.
    Throughput counts jobs entering the dispatcher in [start, end] whose service
    ended by ``end``; W is their mean time at the dispatcher and servers.
    """
    summary = jobs if isinstance(jobs, JobSummary) else JobSummary.of(jobs, start, end)
    if summary.count < min_jobs:
        raise InsufficientData(f"{summary.count} completed jobs, need {min_jobs}")
    L = math.fsum((s.n1 + s.n2) * p for s, p in occupancy.entries)
    if L <= 0:
        raise InsufficientData("time-averaged occupancy is zero")
    lam_hat = summary.count / (end - start)
    return abs(L - lam_hat * summary.mean_sojourn) / L


def least_squares_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientData("slope needs at least two points")
    return float(np.polyfit(x, y, 1)[0])


def drain_slopes(
    samples: Sequence[LoadSample], off_periods: Iterable[tuple[float, float]], min_points: int = 10
) -> list[float]:
    """Load-vs-time slope inside each off period, over samples while the queue is non-empty."""
    out = []
    for lo, hi in off_periods:
        pts = [(s.time, s.queue_length) for s in samples if lo <= s.time <= hi and s.queue_length > 0]
        if len(pts) >= min_points:
            t, q = zip(*pts)
            out.append(least_squares_slope(t, q))
    return out
