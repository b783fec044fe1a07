"""Clients -> intermediate dispatcher -> two heterogeneous servers.

Clients emit Poisson job streams during "on" sessions.  Jobs travel to the
dispatcher (propagation delay), wait in a single FCFS queue, are served by
the fast server if it is idle, otherwise by the slow one, and the response
travels back to the client.  A job already running on the slow server is
never moved to the fast one.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .engine import (
    CLIENT_INTERARRIVAL,
    PROPAGATION,
    SERVER_SERVICE,
    SESSION_PATTERN,
    Event,
    EventKind,
    RngStream,
    Simulator,
    derive_stream_id,
)
from .errors import InconsistentState, InvariantViolation, NonPositiveRate, ServerOrderViolation
from .metrics import MetricsRecorder, OccupancyAccumulator, sample_load
from .model import StateLabel

FAST, SLOW = 1, 2


@dataclass(frozen=True)
class WorkloadConfig:
    client_rates: tuple[float, ...]
    session_on: float = math.inf
    session_off: float = 0.0
    session_distribution: str = "deterministic"
    propagation_delay_mean: float = 0.05
    propagation_jitter: float = 0.01

    def __post_init__(self):
        rates = tuple(float(r) for r in self.client_rates)
        object.__setattr__(self, "client_rates", rates)
        if not rates:
            raise InvariantViolation("at least one client is required")
        if any(not (r > 0) or not math.isfinite(r) for r in rates):
            raise NonPositiveRate(f"client rates must be finite and positive: {rates}")
        if not (self.session_on > 0):
            raise InvariantViolation("session_on must be positive")
        if not (self.session_off >= 0) or not math.isfinite(self.session_off):
            raise InvariantViolation("session_off must be finite and >= 0")
        if self.session_distribution not in ("deterministic", "exponential"):
            raise InvariantViolation(
                f"session_distribution must be deterministic or exponential, "
                f"got {self.session_distribution!r}"
            )
        if self.propagation_delay_mean < 0 or self.propagation_jitter < 0:
            raise InvariantViolation("propagation parameters must be >= 0")
        if self.propagation_jitter > self.propagation_delay_mean:
            raise InvariantViolation("propagation_jitter may not exceed propagation_delay_mean")

    @property
    def total_rate(self) -> float:
        return math.fsum(self.client_rates)

    @property
    def sessions_enabled(self) -> bool:
        return math.isfinite(self.session_on)


@dataclass(frozen=True)
class SimConfig:
    mu1: float
    mu2: float
    workload: WorkloadConfig
    seed: int = 42
    replication: int = 0
    warmup: float = 0.0
    load_sample_period: Optional[float] = 1.0
    processing_delay: float = 0.0
    # deterministic-service test hook: (fast, slow) constants replacing Exp(mu)
    fixed_service: Optional[tuple[float, float]] = None
    record_series: bool = True

    def __post_init__(self):
        for name in ("mu1", "mu2"):
            v = getattr(self, name)
            if not (v > 0) or not math.isfinite(v):
                raise NonPositiveRate(f"{name} must be finite and positive, got {v!r}")
        if self.mu1 < self.mu2:
            raise ServerOrderViolation(f"mu1={self.mu1} < mu2={self.mu2}")
        if self.load_sample_period is not None and not (self.load_sample_period > 0):
            raise InvariantViolation("load_sample_period must be positive")
        if self.warmup < 0 or self.processing_delay < 0:
            raise InvariantViolation("warmup and processing_delay must be >= 0")


class Job:
    __slots__ = (
        "id",
        "client_id",
        "session",
        "created_at",
        "enqueued_at",
        "dispatched_at",
        "server_id",
        "service_end",
        "response_at",
        "load_at_enqueue",
    )

    def __init__(self, id: int, client_id: int, created_at: float, session: int = 0):
        self.id = id
        self.client_id = client_id
        self.session = session
        self.created_at = created_at
        self.enqueued_at = None
        self.dispatched_at = None
        self.server_id = None
        self.service_end = None
        self.response_at = None
        self.load_at_enqueue = None

    @property
    def service_start(self):
        return self.dispatched_at

    @property
    def queue_wait(self) -> float:
        return self.dispatched_at - self.enqueued_at

    @property
    def sojourn(self) -> float:
        """Time spent at the dispatcher and servers."""
        return self.service_end - self.enqueued_at

    @property
    def rtt(self) -> float:
        return self.response_at - self.created_at

    def __repr__(self):
        return (
            f"Job(id={self.id}, client={self.client_id}, created={self.created_at}, "
            f"enqueued={self.enqueued_at}, dispatched={self.dispatched_at}, "
            f"server={self.server_id}, end={self.service_end}, response={self.response_at})"
        )


class DispatcherState:
    """FIFO queue plus the job (or None) held by each server."""

    __slots__ = ("fifo_queue", "servers")

    def __init__(self):
        self.fifo_queue: deque[Job] = deque()
        self.servers: list[Optional[Job]] = [None, None, None]  # index 0 unused

    @property
    def server_busy(self) -> tuple[bool, bool]:
        return self.servers[FAST] is not None, self.servers[SLOW] is not None

    @property
    def counts(self) -> tuple[int, int]:
        s = self.servers
        return len(self.fifo_queue) + (s[FAST] is not None), int(s[SLOW] is not None)

    def in_service(self) -> int:
        return (self.servers[FAST] is not None) + (self.servers[SLOW] is not None)


def choose_server(state: DispatcherState) -> Optional[int]:
    """Fast server if idle, else slow server if idle, else None."""
    if state.servers[FAST] is None:
        return FAST
    if state.servers[SLOW] is None:
        return SLOW
    return None


class Network:
    """Event handlers for one simulation instance.

    Typical use::

        net = Network(config)
        net.run(horizon)
        net.recorder.jobs, net.occupancy()
    """

    def __init__(self, config: SimConfig, recorder: Optional[MetricsRecorder] = None):
        self.config = config
        self.workload = config.workload
        self.sim = Simulator()
        self.state = DispatcherState()
        self.recorder = recorder if recorder is not None else MetricsRecorder(warmup=config.warmup)
        self.occupancy_acc = OccupancyAccumulator(warmup=config.warmup)
        self.check_invariants = False

        seed, rep = config.seed, config.replication
        self._client_streams = [
            RngStream(seed, derive_stream_id(CLIENT_INTERARRIVAL, i, rep))
            for i in range(len(self.workload.client_rates))
        ]
        self._service_streams = {
            FAST: RngStream(seed, derive_stream_id(SERVER_SERVICE, FAST, rep)),
            SLOW: RngStream(seed, derive_stream_id(SERVER_SERVICE, SLOW, rep)),
        }
        self._uplink = RngStream(seed, derive_stream_id(PROPAGATION, 0, rep))
        self._downlink = RngStream(seed, derive_stream_id(PROPAGATION, 1, rep))
        self._session_stream = RngStream(seed, derive_stream_id(SESSION_PATTERN, 0, rep))
        self._rates = {FAST: config.mu1, SLOW: config.mu2}

        self.session_index = -1
        self.session_on = False
        self.session_end_at = -math.inf
        self.session_starts: list[float] = []
        self.session_ends: list[float] = []

        self.created = 0
        self.completed = 0  # responses delivered to clients
        self.in_flight_up = 0
        self.in_flight_down = 0
        self.arrived_at_dispatcher = 0
        self.service_completions = 0
        self._next_id = 0
        self._started = False
        self.horizon = None
        self._last_label = (0, 0)
        self.occupancy_acc.observe(0.0, (0, 0))

        self._handlers = {
            EventKind.JOB_CREATED: self._on_job_created_event,
            EventKind.JOB_ARRIVED_AT_DISPATCHER: self._on_dispatcher_event,
            EventKind.SERVICE_COMPLETED: self._on_service_completed_event,
            EventKind.RESPONSE_ARRIVED_AT_CLIENT: self._on_response_event,
            EventKind.SESSION_START: self._on_session_start,
            EventKind.SESSION_END: self._on_session_end,
            EventKind.SAMPLE_LOAD: self._on_sample_load,
        }

    # --- setup -----------------------------------------------------------

    def start(self, *, clients: bool = True) -> None:
        """Schedule the first session (if ``clients``) and the load sampler."""
        if self._started:
            return
        self._started = True
        if self.config.load_sample_period is not None:
            self.sim.schedule(0.0, EventKind.SAMPLE_LOAD, 0)
        if clients:
            self.sim.schedule(0.0, EventKind.SESSION_START)

    def submit(self, client_id: int, at: float) -> None:
        """Inject one scripted job created at time ``at`` (no follow-up arrivals)."""
        self.sim.schedule(at, EventKind.JOB_CREATED, (client_id, True))

    def run(self, horizon: float, *, clients: bool = True) -> float:
        self.start(clients=clients)
        self.sim.run_until(horizon, self._dispatch)
        self.horizon = horizon
        self.occupancy_acc.close(horizon)
        return self.sim.clock

    def _dispatch(self, ev: Event) -> None:
        self._handlers[ev.kind](ev)
        if self.check_invariants:
            self.verify()

    # --- helpers ------------------------------------------------------------

    def _propagation(self, stream: RngStream) -> float:
        w = self.workload
        u = stream.uniform()
        return w.propagation_delay_mean + w.propagation_jitter * (2.0 * u - 1.0)

    def _service_time(self, server_id: int) -> float:
        fixed = self.config.fixed_service
        if fixed is not None:
            return fixed[server_id - 1]
        return self._service_streams[server_id].exponential(self._rates[server_id])

    def _state_changed(self, now: float) -> None:
        st = self.state
        s = st.servers
        label = (len(st.fifo_queue) + (s[FAST] is not None), int(s[SLOW] is not None))
        if label != self._last_label:
            self._last_label = label
            self.occupancy_acc.observe(now, label)

    def _start_service(self, job: Job, server_id: int, now: float) -> None:
        self.state.servers[server_id] = job
        job.dispatched_at = now
        job.server_id = server_id
        self.sim.schedule(now + self._service_time(server_id), EventKind.SERVICE_COMPLETED, server_id)

    # --- sessions ---------------------------------------------------------

    def _session_length(self, mean: float) -> float:
        if self.workload.session_distribution == "exponential" and mean > 0:
            return self._session_stream.exponential(1.0 / mean)
        self._session_stream.uniform()  # keep one draw per session edge
        return mean

    def _on_session_start(self, ev: Event) -> None:
        now = ev.time
        w = self.workload
        self.session_index += 1
        self.session_on = True
        self.session_starts.append(now)
        if w.sessions_enabled:
            self.session_end_at = now + self._session_length(w.session_on)
            self.sim.schedule(self.session_end_at, EventKind.SESSION_END)
        else:
            self.session_end_at = math.inf
        for cid, rate in enumerate(w.client_rates):
            t_next = now + self._client_streams[cid].exponential(rate)
            if t_next < self.session_end_at:
                self.sim.schedule(t_next, EventKind.JOB_CREATED, (cid, False))

    def _on_session_end(self, ev: Event) -> None:
        self.session_on = False
        self.session_ends.append(ev.time)
        off = self._session_length(self.workload.session_off)
        self.sim.schedule(ev.time + off, EventKind.SESSION_START)

    # --- job lifecycle ----------------------------------------------------

    def _on_job_created_event(self, ev: Event) -> None:
        client_id, scripted = ev.payload
        self.on_job_created(client_id, ev.time, scripted=scripted)

    def on_job_created(self, client_id: int, now: float, *, scripted: bool = False) -> Job:
        job = Job(self._next_id, client_id, now, self.session_index)
        self._next_id += 1
        self.created += 1
        self.in_flight_up += 1
        delay = self._propagation(self._uplink) + self.config.processing_delay
        self.sim.schedule(now + delay, EventKind.JOB_ARRIVED_AT_DISPATCHER, job)
        if not scripted:
            rate = self.workload.client_rates[client_id]
            t_next = now + self._client_streams[client_id].exponential(rate)
            # an interarrival crossing the session end is dropped and redrawn
            # at the next session start
            if t_next < self.session_end_at:
                self.sim.schedule(t_next, EventKind.JOB_CREATED, (client_id, False))
        return job

    def _on_dispatcher_event(self, ev: Event) -> None:
        job = ev.payload
        job.enqueued_at = ev.time
        self.on_job_at_dispatcher(job, ev.time)

    def on_job_at_dispatcher(self, job: Job, now: float) -> None:
        self.in_flight_up -= 1
        self.arrived_at_dispatcher += 1
        st = self.state
        job.load_at_enqueue = len(st.fifo_queue)
        if self.config.record_series:
            self.recorder.arrivals.append(now)
        server = choose_server(st)
        if server is None:
            st.fifo_queue.append(job)
        else:
            self._start_service(job, server, now)
        self._state_changed(now)

    def _on_service_completed_event(self, ev: Event) -> None:
        self.on_service_completed(ev.payload, ev.time)

    def on_service_completed(self, server_id: int, now: float) -> None:
        st = self.state
        job = st.servers[server_id]
        if job is None:
            raise InconsistentState(f"completion on idle server {server_id} at t={now}")
        job.service_end = now
        self.service_completions += 1
        self.in_flight_down += 1
        if self.config.record_series:
            self.recorder.completions.append(now)
        self.recorder.observe_sojourn(job)
        self.sim.schedule(now + self._propagation(self._downlink), EventKind.RESPONSE_ARRIVED_AT_CLIENT, job)
        if st.fifo_queue:
            self._start_service(st.fifo_queue.popleft(), server_id, now)
        else:
            st.servers[server_id] = None
        self._state_changed(now)

    def _on_response_event(self, ev: Event) -> None:
        job = ev.payload
        job.response_at = ev.time
        self.in_flight_down -= 1
        self.completed += 1
        self.recorder.record_job(job)

    def _on_sample_load(self, ev: Event) -> None:
        k = ev.payload
        self.recorder.add_load_sample(sample_load(ev.time, self.state))
        self.sim.schedule((k + 1) * self.config.load_sample_period, EventKind.SAMPLE_LOAD, k + 1)

    # --- inspection -------------------------------------------------------

    def state_snapshot(self) -> StateLabel:
        n1, n2 = self.state.counts
        return StateLabel(n1, n2)

    def verify(self) -> None:
        """Raise InconsistentState if a conservation or scheduling invariant fails."""
        st = self.state
        fast_busy, slow_busy = st.server_busy
        if st.fifo_queue and not (fast_busy and slow_busy):
            raise InconsistentState("job waiting while a server is idle")
        total = self.completed + len(st.fifo_queue) + st.in_service() + self.in_flight_up + self.in_flight_down
        if total != self.created:
            raise InconsistentState(f"job conservation broken: created={self.created}, accounted={total}")
        n1, n2 = st.counts
        if n1 != len(st.fifo_queue) + fast_busy or n2 != int(slow_busy):
            raise InconsistentState("state counts out of sync")

    def occupancy(self):
        return self.occupancy_acc.distribution()


def single_client_workload(lam: float, **kwargs) -> WorkloadConfig:
    return WorkloadConfig(client_rates=(lam,), **kwargs)


def split_rates(lam: float, clients: int) -> tuple[float, ...]:
    """``clients`` equal rates summing to ``lam``."""
    return tuple([lam / clients] * clients)


def session_of(jobs: Sequence[Job]) -> dict[int, list[Job]]:
    """Group jobs by the session in which they were created."""
    out: dict[int, list[Job]] = {}
    for job in jobs:
        out.setdefault(job.session, []).append(job)
    return out
