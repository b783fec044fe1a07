"""Closed-form steady state of the heterogeneous M/M/2 chain.

All probabilities are expressed relative to ``p(0,0)``:

    p(0,1)/p(0,0) = rho/(1+2rho) * lam/mu2
    p(1,0)/p(0,0) = (1+rho)/(1+2rho) * lam/mu1
    p(1,1)/p(0,0) = rho/(1+2rho) * lam*(lam+mu2)/(mu1*mu2)
    p(n,1)        = rho**(n-1) * p(1,1)

with ``rho = lam/(mu1+mu2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationTooSmall, UnstableSystem
from .model import (
    AggregateMetrics,
    ModelParams,
    StationaryDistribution,
    canonical_states,
    is_stable,
    traffic_intensity,
)


@dataclass(frozen=True)
class ClosedFormRatios:
    r10: float
    r01: float
    r11: float


def closed_form_ratios(params: ModelParams) -> ClosedFormRatios:
    lam, mu1, mu2 = params.lam, params.mu1, params.mu2
    rho = traffic_intensity(params)
    share = rho / (1.0 + 2.0 * rho)
    return ClosedFormRatios(
        r10=(1.0 + rho) / (1.0 + 2.0 * rho) * lam / mu1,
        r01=share * lam / mu2,
        r11=share * lam * (lam + mu2) / (mu1 * mu2),
    )


def tail_probability(params: ModelParams, ratios: ClosedFormRatios, n: int) -> float:
    """p(n,1)/p(0,0) for n >= 1."""
    if n < 1:
        raise DomainError(f"tail index must be >= 1, got {n}")
    if n == 1:
        return ratios.r11
    return traffic_intensity(params) ** (n - 1) * ratios.r11


def _require_stable(params: ModelParams) -> float:
    rho = traffic_intensity(params)
    if not is_stable(params):
        raise UnstableSystem(f"rho={rho:.6g} >= 1: no stationary distribution")
    return rho


def normalization(params: ModelParams, ratios: ClosedFormRatios) -> float:
    """p(0,0), from summing all ratios including the geometric tail."""
    rho = _require_stable(params)
    return 1.0 / (1.0 + ratios.r10 + ratios.r01 + ratios.r11 / (1.0 - rho))


def stationary_distribution(params: ModelParams, truncation_n: int) -> StationaryDistribution:
    if truncation_n < 1:
        raise TruncationTooSmall(f"truncation_n must be >= 1, got {truncation_n}")
    rho = _require_stable(params)
    ratios = closed_form_ratios(params)
    p00 = normalization(params, ratios)
    p11 = ratios.r11 * p00
    tail = p11 * rho ** np.arange(truncation_n)
    probs = np.concatenate(([p00, ratios.r10 * p00, ratios.r01 * p00], tail))
    # mass of (n,1) for n > truncation_n
    residual = p11 * rho**truncation_n / (1.0 - rho)
    return StationaryDistribution(
        tuple(canonical_states(truncation_n)), probs, truncation_n, "closed-form", float(residual)
    )


def aggregate_metrics(params: ModelParams) -> AggregateMetrics:
    rho = _require_stable(params)
    ratios = closed_form_ratios(params)
    p00 = normalization(params, ratios)
    p10, p01, p11 = ratios.r10 * p00, ratios.r01 * p00, ratios.r11 * p00
    g = 1.0 / (1.0 - rho)
    L = p10 + p01 + p11 * (g * g + g)
    Lq = p11 * rho * g * g
    return AggregateMetrics(
        rho=rho,
        L=L,
        Lq=Lq,
        W=L / params.lam,
        Wq=Lq / params.lam,
        util1=1.0 - p00 - p01,
        util2=1.0 - p00 - p10,
        p_empty=p00,
    )


def balance_residuals(
    params: ModelParams, dist: StationaryDistribution, *, mistyped_inflow: bool = False
) -> list[tuple[str, float]]:
    """Absolute residual of each global balance equation evaluated on ``dist``.

    Returns ``(state, |outflow - inflow|)`` pairs named after the balanced
    state: ``"(0,0)"``, ``"(1,0)"``, ``"(0,1)"``, ``"(1,1)"``, then ``"(n,1)"``
    for ``1 < n < truncation_n``.  The inflow from (0,1) into (1,1) is an
    arrival (rate lam); ``mistyped_inflow=True`` uses mu2 there instead, a
    known misprint of that balance equation kept for regression checks.
    """
    N = dist.truncation_n
    if N < 3:
        raise TruncationTooSmall(f"balance check needs truncation_n >= 3, got {N}")
    lam, mu1, mu2 = params.lam, params.mu1, params.mu2
    p = dist.p
    p00, p10, p01, p11, p21 = p(0, 0), p(1, 0), p(0, 1), p(1, 1), p(2, 1)
    inflow_01 = mu2 if mistyped_inflow else lam
    out = [
        ("(0,0)", abs(lam * p00 - mu1 * p10 - mu2 * p01)),
        ("(1,0)", abs((lam + mu1) * p10 - mu2 * p11 - lam * p00)),
        ("(0,1)", abs((lam + mu2) * p01 - mu1 * p11)),
        ("(1,1)", abs((lam + mu1 + mu2) * p11 - inflow_01 * p01 - lam * p10 - (mu1 + mu2) * p21)),
    ]
    for n in range(2, N):
        lhs = (lam + mu1 + mu2) * p(n, 1)
        rhs = lam * p(n - 1, 1) + (mu1 + mu2) * p(n + 1, 1)
        out.append((f"({n},1)", abs(lhs - rhs)))
    return out
