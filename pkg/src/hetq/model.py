"""Shared domain types for the heterogeneous two-server queue.

Server 1 is always the fast server (``mu1 >= mu2``).  A system state is the
pair ``(n1, n2)`` where ``n1`` counts the job at the fast server plus every
job waiting in the queue, and ``n2`` is 1 when the slow server is busy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import DomainError, NonPositiveRate, ServerOrderViolation

SOURCES = ("closed-form", "oracle", "simulation-occupancy")


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu1: float
    mu2: float

    def __post_init__(self):
        for name in ("lam", "mu1", "mu2"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise NonPositiveRate(f"{name} must be a finite positive rate, got {value!r}")
        if self.mu1 < self.mu2:
            raise ServerOrderViolation(
                f"mu1={self.mu1} < mu2={self.mu2}: server 1 must be the faster server"
            )

    @property
    def rho(self) -> float:
        return traffic_intensity(self)


def validate_params(lam, mu1, mu2) -> ModelParams:
    """Build a :class:`ModelParams`, raising instead of repairing bad input.

    ``mu1 < mu2`` is rejected; the servers are never swapped silently.
    """
    try:
        lam, mu1, mu2 = float(lam), float(mu1), float(mu2)
    except (TypeError, ValueError) as exc:
        raise NonPositiveRate(f"rates must be numbers: {exc}") from None
    return ModelParams(lam, mu1, mu2)


def traffic_intensity(params: ModelParams) -> float:
    return params.lam / (params.mu1 + params.mu2)


def is_stable(params: ModelParams) -> bool:
    return traffic_intensity(params) < 1.0


@dataclass(frozen=True, order=True)
class StateLabel:
    n1: int
    n2: int

    def __post_init__(self):
        if not is_reachable(self.n1, self.n2):
            raise DomainError(f"unreachable state ({self.n1},{self.n2})")

    def __str__(self) -> str:
        return f"({self.n1},{self.n2})"

    def __iter__(self) -> Iterator[int]:
        yield self.n1
        yield self.n2


def is_reachable(n1: int, n2: int) -> bool:
    """True for (0,0), (1,0), (0,1) and (n,1) with n >= 1."""
    if isinstance(n1, bool) or isinstance(n2, bool):
        return False
    if not isinstance(n1, (int, np.integer)) or not isinstance(n2, (int, np.integer)):
        return False
    if n1 < 0 or n2 not in (0, 1):
        return False
    return n2 == 1 or n1 <= 1


def state_index(n1: int, n2: int) -> int:
    """Position of a state in the canonical order (0,0), (1,0), (0,1), (1,1), (2,1), ..."""
    if n2 == 0:
        if n1 > 1:
            raise DomainError(f"unreachable state ({n1},0)")
        return n1
    if n1 == 0:
        return 2
    return n1 + 2


def canonical_states(truncation_n: int) -> list[StateLabel]:
    """States up to ``n1 = truncation_n`` in canonical order."""
    states = [StateLabel(0, 0), StateLabel(1, 0), StateLabel(0, 1)]
    states.extend(StateLabel(n, 1) for n in range(1, truncation_n + 1))
    return states


@dataclass(frozen=True)
class StationaryDistribution:
    """Probabilities over chain states.

    ``residual`` holds mass that lies beyond ``truncation_n`` (closed form only);
    it is reported, never folded back into the listed states.
    """

    states: tuple[StateLabel, ...]
    probabilities: np.ndarray
    truncation_n: int
    source: str
    residual: float = 0.0
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != (len(self.states),):
            raise ValueError("one probability per state required")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "_index", {(s.n1, s.n2): i for i, s in enumerate(self.states)})

    @property
    def entries(self) -> list[tuple[StateLabel, float]]:
        return list(zip(self.states, self.probabilities.tolist()))

    def p(self, n1: int, n2: int) -> float:
        """Probability of ``(n1, n2)``; 0.0 for states not represented."""
        i = self._index.get((n1, n2))
        return 0.0 if i is None else float(self.probabilities[i])

    def total(self) -> float:
        return float(self.probabilities.sum())

    def aligned(self, other: StationaryDistribution) -> tuple[np.ndarray, np.ndarray]:
        """Both probability vectors over the union of their states."""
        keys = sorted(set(self._index) | set(other._index), key=lambda k: state_index(*k))
        a = np.array([self.p(*k) for k in keys])
        b = np.array([other.p(*k) for k in keys])
        return a, b

    def max_abs_diff(self, other: StationaryDistribution) -> float:
        a, b = self.aligned(other)
        return float(np.max(np.abs(a - b)))


@dataclass(frozen=True)
class AggregateMetrics:
    rho: float
    L: float
    Lq: float
    W: float
    Wq: float
    util1: float
    util2: float
    p_empty: float

    def as_row(self) -> dict[str, float]:
        return {
            "rho": self.rho,
            "L": self.L,
            "Lq": self.Lq,
            "W": self.W,
            "Wq": self.Wq,
            "util1": self.util1,
            "util2": self.util2,
            "p_empty": self.p_empty,
        }


def distribution_from_mapping(
    probs: Iterable[tuple[tuple[int, int], float]], source: str, residual: float = 0.0
) -> StationaryDistribution:
    """Build a distribution from ``((n1, n2), p)`` pairs, sorted canonically."""
    items = sorted(((tuple(k), float(v)) for k, v in probs), key=lambda kv: state_index(*kv[0]))
    states = tuple(StateLabel(int(k[0]), int(k[1])) for k, _ in items)
    values = np.array([v for _, v in items], dtype=float)
    trunc = max((s.n1 for s in states), default=0)
    return StationaryDistribution(states, values, trunc, source, residual)
