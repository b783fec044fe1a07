"""Truncated-CTMC oracle.

Builds the generator matrix directly from the transition rules of the
two-server system and solves ``pi Q = 0`` by a dense LU solve.  Nothing here
uses the closed-form expressions, so the two can check each other.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystem, TruncationTooSmall
from .model import ModelParams, StateLabel, StationaryDistribution, canonical_states, state_index

PIVOT_TOL = 1e-14
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class GeneratorMatrix:
    states: tuple[StateLabel, ...]
    rates: np.ndarray
    truncation_n: int

    def index(self, n1: int, n2: int) -> int:
        return state_index(n1, n2)


def build_generator(
    params: ModelParams, truncation_n: int, *, mistyped_inflow: bool = False
) -> GeneratorMatrix:
    """Generator over [(0,0), (1,0), (0,1), (1,1), ..., (N,1)].

    Arrivals in (N,1) are dropped.  ``mistyped_inflow=True`` swaps the
    (0,1)->(1,1) arrival rate for mu2, the chain implied by the known misprint
    of the (1,1) balance equation; it exists only for the regression check.
    """
    if truncation_n < 2:
        raise TruncationTooSmall(f"generator needs truncation_n >= 2, got {truncation_n}")
    lam, mu1, mu2 = params.lam, params.mu1, params.mu2
    states = tuple(canonical_states(truncation_n))
    Q = np.zeros((len(states), len(states)))

    def add(src, dst, rate):
        Q[state_index(*src), state_index(*dst)] += rate

    add((0, 0), (1, 0), lam)  # idle system: the fast server takes the job
    add((1, 0), (0, 0), mu1)
    add((1, 0), (1, 1), lam)
    add((0, 1), (0, 0), mu2)
    add((0, 1), (1, 1), mu2 if mistyped_inflow else lam)
    add((1, 1), (0, 1), mu1)
    add((1, 1), (1, 0), mu2)
    for n in range(1, truncation_n + 1):
        if n < truncation_n:
            add((n, 1), (n + 1, 1), lam)
        if n >= 2:
            # either completion pulls the queue head, nobody migrates
            add((n, 1), (n - 1, 1), mu1 + mu2)
    Q[np.diag_indices_from(Q)] = -Q.sum(axis=1)
    Q.setflags(write=False)
    return GeneratorMatrix(states, Q, truncation_n)


def stationary_solve(gen: GeneratorMatrix) -> StationaryDistribution:
    """Solve ``pi Q = 0, sum(pi) = 1`` by dense LU with partial pivoting.

    The balance equation of (0,0) is swapped for the normalization row; with
    that choice the geometric tail comes out componentwise accurate, whereas
    dropping the boundary equation loses tiny tail entries to cancellation.
    """
    Q = gen.rates
    n = Q.shape[0]
    A = Q.T.copy()
    A[0, :] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    with warnings.catch_warnings():
        # exact-zero pivots are reported below as SingularSystem
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL * scale:
        raise SingularSystem("pivot below tolerance; generator is malformed or reducible")
    pi = scipy.linalg.lu_solve((lu, piv), b)
    low = pi.min()
    if low < -NEGATIVE_TOL:
        raise SingularSystem(f"solution has a negative entry {low:.3g}")
    if low < 0:
        warnings.warn(f"clamping negative stationary entries (min {low:.3g}) to 0", RuntimeWarning)
        pi = np.clip(pi, 0.0, None)
    pi = np.minimum(pi, 1.0)
    return StationaryDistribution(gen.states, pi, gen.truncation_n, "oracle")


def generator_residual(gen: GeneratorMatrix, dist: StationaryDistribution) -> float:
    """``||pi Q||_inf``."""
    return float(np.max(np.abs(dist.probabilities @ gen.rates)))


def occupancy_moments(dist: StationaryDistribution) -> tuple[float, float, float, float]:
    """``(L, Lq, util1, util2)`` computed by direct summation over ``dist``."""
    L = Lq = util1 = util2 = 0.0
    for state, p in zip(dist.states, dist.probabilities.tolist()):
        L += (state.n1 + state.n2) * p
        if state.n2 == 1 and state.n1 > 1:
            Lq += (state.n1 - 1) * p
        if state.n1 >= 1:
            util1 += p
        if state.n2 == 1:
            util2 += p
    return L, Lq, util1, util2
