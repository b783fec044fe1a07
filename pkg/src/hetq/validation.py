"""Three-way agreement checks: closed form, CTMC oracle, simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from . import analytic, oracle
from .errors import InsufficientData, UnstableSystem
from .model import ModelParams, is_stable, traffic_intensity
from .network import SimConfig, WorkloadConfig
from .runner import ReplicationResult, mean_and_stderr, run_replications

NAMED_STATES = ((0, 0), (1, 0), (0, 1), (1, 1))
REPORT_COLUMNS = ("check", "lhs", "rhs", "tolerance", "pass")


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool


def close_check(name: str, lhs: float, rhs: float, tol: float) -> Check:
    return Check(name, lhs, rhs, tol, abs(lhs - rhs) <= tol)


def below_check(name: str, value: float, tol: float) -> Check:
    return Check(name, value, 0.0, tol, value < tol)


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)
    params: Optional[ModelParams] = None
    seeds: tuple[int, ...] = ()

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> None:
        self.checks.append(check)

    def extend(self, other: ValidationReport) -> ValidationReport:
        self.checks.extend(other.checks)
        self.seeds = self.seeds + tuple(s for s in other.seeds if s not in self.seeds)
        return self

    def rows(self):
        for c in self.checks:
            yield (c.name, float(c.lhs), float(c.rhs), float(c.tolerance), c.passed)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def text(self) -> str:
        p = self.params
        lines = []
        if p is not None:
            lines.append(f"params: lambda={p.lam:.9g} mu1={p.mu1:.9g} mu2={p.mu2:.9g} rho={p.rho:.9g}")
        if self.seeds:
            lines.append("seeds: " + " ".join(str(s) for s in self.seeds))
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status} {c.name}: lhs={c.lhs:.9g} rhs={c.rhs:.9g} tol={c.tolerance:.3g}")
        lines.append(f"overall: {'PASS' if self.overall_pass else 'FAIL'}")
        return "\n".join(lines) + "\n"


def validate_closed_form(params: ModelParams, truncation_n: int = 500, tol: float = 1e-9) -> ValidationReport:
    if not is_stable(params):
        raise UnstableSystem(f"rho={traffic_intensity(params):.6g} >= 1")
    report = ValidationReport(params=params)
    rho = traffic_intensity(params)
    closed = analytic.stationary_distribution(params, truncation_n)
    gen = oracle.build_generator(params, max(truncation_n, 2))
    orc = oracle.stationary_solve(gen)

    report.add(below_check("closed_vs_oracle_max_abs", closed.max_abs_diff(orc), tol))
    report.add(below_check("oracle_generator_residual", oracle.generator_residual(gen, orc), tol))

    dist3 = closed if truncation_n >= 3 else analytic.stationary_distribution(params, 3)
    residuals = analytic.balance_residuals(params, dist3)
    report.add(below_check("balance_residual_max", max(r for _, r in residuals), tol))

    ratios = [closed.p(n, 1) / closed.p(n - 1, 1) for n in range(2, min(20, truncation_n) + 1)]
    if ratios:
        worst = max(abs(r - rho) for r in ratios)
        report.add(below_check("geometric_tail_ratio", worst, tol))

    m = analytic.aggregate_metrics(params)
    report.add(close_check("busy_servers_identity", m.L - m.Lq, m.util1 + m.util2, tol))
    report.add(close_check("throughput_conservation", params.mu1 * m.util1 + params.mu2 * m.util2, params.lam, tol))
    L, Lq, _, _ = oracle.occupancy_moments(orc)
    report.add(close_check("L_closed_vs_oracle", m.L, L, max(tol, 1e-8)))
    report.add(close_check("Lq_closed_vs_oracle", m.Lq, Lq, max(tol, 1e-8)))

    # the misprinted (1,1) balance misses by (lam - mu2) * p(0,1); the corrected one is exact
    printed = dict(analytic.balance_residuals(params, dist3, mistyped_inflow=True))["(1,1)"]
    expected = abs(params.lam - params.mu2) * closed.p(0, 1)
    report.add(close_check("mistyped_inflow_residual", printed, expected, tol))
    return report


def validate_simulation(
    params: ModelParams,
    sim_config: Optional[SimConfig] = None,
    tol_abs: float = 0.01,
    *,
    horizon: float = 1e6,
    replications: int = 5,
    workers: int = 1,
    results: Optional[list[ReplicationResult]] = None,
) -> ValidationReport:
    """Compare long-run simulation estimates with the closed form.

    Occupancy of each named state must be within ``tol_abs`` in at least 80% of
    replications, Little's law must hold to 1% in every replication, and the
    mean queue wait must lie within three standard errors of the analytic Wq.
    """
    if not is_stable(params):
        raise UnstableSystem(f"rho={traffic_intensity(params):.6g} >= 1")
    if replications < 2:
        raise InsufficientData("at least two replications are needed for a standard error")
    if sim_config is None:
        sim_config = SimConfig(params.mu1, params.mu2, WorkloadConfig((params.lam,)), warmup=0.01 * horizon)
    if not math.isclose(sim_config.workload.total_rate, params.lam, rel_tol=1e-9) or (
        sim_config.mu1,
        sim_config.mu2,
    ) != (params.mu1, params.mu2):
        raise ValueError("simulation config does not match the model parameters")
    if results is None:
        results = run_replications(sim_config, horizon, replications, workers)

    report = ValidationReport(params=params, seeds=(sim_config.seed,))
    closed = analytic.stationary_distribution(params, 1)
    needed = math.ceil(0.8 * len(results))
    for n1, n2 in NAMED_STATES:
        hits = sum(abs(r.occupancy.p(n1, n2) - closed.p(n1, n2)) <= tol_abs for r in results)
        report.add(Check(f"occupancy_p{n1}{n2}_replications_within_tol", hits, needed, tol_abs, hits >= needed))

    for r in results:
        if r.littles_discrepancy is None:
            raise InsufficientData(f"replication {r.replication}: too few completed jobs for Little's law")
        report.add(below_check(f"littles_law[rep{r.replication}]", r.littles_discrepancy, 0.01))

    mean, se = mean_and_stderr([r.mean_wait for r in results])
    wq = analytic.aggregate_metrics(params).Wq
    report.add(close_check("mean_queue_wait_vs_Wq", mean, wq, 3.0 * se))
    return report
