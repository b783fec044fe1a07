"""Discrete-event kernel: future-event list, clock and seeded random streams.

Random numbers come from PCG64 (numpy's bit generator) seeded through
``SeedSequence(seed, spawn_key=(stream_id,))``.  Uniforms are formed from the
raw 64-bit outputs as ``((x >> 11) + 1) * 2**-53``, which lies in (0, 1] and
does not depend on numpy's float conversion routines, so a given
``(seed, stream_id)`` yields the same variates on every platform.
"""
from __future__ import annotations

import heapq
import math
from enum import IntEnum
from typing import Any, Callable, NamedTuple

import numpy as np

from .errors import NonPositiveRate, PastEvent

_U53 = 2.0**-53
_U64 = 2**64


class EventKind(IntEnum):
    JOB_CREATED = 0
    JOB_ARRIVED_AT_DISPATCHER = 1
    SERVICE_COMPLETED = 2
    RESPONSE_ARRIVED_AT_CLIENT = 3
    SESSION_START = 4
    SESSION_END = 5
    SAMPLE_LOAD = 6


class Event(NamedTuple):
    time: float
    sequence: int
    kind: EventKind
    payload: Any = None


class Simulator:
    """Future-event list ordered by ``(time, sequence)``.

    Simultaneous events are handled in the order they were scheduled.
    """

    def __init__(self, start: float = 0.0):
        self.clock = float(start)
        self._heap: list[Event] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: float, kind: EventKind, payload: Any = None) -> Event:
        if time < self.clock:
            raise PastEvent(f"cannot schedule at t={time} before clock={self.clock}")
        ev = Event(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def peek_time(self) -> float:
        return self._heap[0].time if self._heap else math.inf

    def run_until(self, t_end: float, handler: Callable[[Event], None]) -> float:
        """Handle events with ``time <= t_end``; the clock stops at the last one handled."""
        heap = self._heap
        pop = heapq.heappop
        while heap and heap[0][0] <= t_end:
            ev = pop(heap)
            self.clock = ev[0]
            handler(ev)
        return self.clock


# purpose codes packed into stream ids
CLIENT_INTERARRIVAL = 1
SERVER_SERVICE = 2
PROPAGATION = 3
SESSION_PATTERN = 4


def derive_stream_id(purpose: int, entity: int = 0, replication: int = 0) -> int:
    """Pack ``(replication, purpose, entity)`` into one 64-bit stream id."""
    if not (0 <= replication < 2**32 and 0 <= purpose < 2**8 and 0 <= entity < 2**24):
        raise ValueError("stream id component out of range")
    return (replication << 32) | (purpose << 24) | entity


class RngStream:
    """One independent, reproducible source of variates."""

    __slots__ = ("seed", "stream_id", "_bitgen", "_block", "_it")

    def __init__(self, seed: int, stream_id: int, block: int = 4096):
        if not (0 <= seed < _U64) or not (0 <= stream_id < _U64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._bitgen = np.random.PCG64(ss)
        self._block = block
        self._it = iter(())

    def _refill(self):
        raw = self._bitgen.random_raw(self._block)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
        self._it = iter(u.tolist())

    def uniform(self) -> float:
        """Uniform variate in (0, 1]."""
        try:
            return next(self._it)
        except StopIteration:
            self._refill()
            return next(self._it)

    def exponential(self, rate: float) -> float:
        try:
            u = next(self._it)
        except StopIteration:
            self._refill()
            u = next(self._it)
        # u in (0, 1] makes -log(u) finite; u == 1 would give 0, so shift it
        # to the largest double below 1
        if u == 1.0:
            u = 1.0 - _U53
        return -math.log(u) / rate


def sample_exponential(stream: RngStream, rate: float) -> float:
    """Inverse-transform exponential draw; never 0 or infinite."""
    if not (rate > 0) or not math.isfinite(rate):
        raise NonPositiveRate(f"rate must be finite and positive, got {rate!r}")
    return stream.exponential(rate)
