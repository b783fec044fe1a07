"""``hetq`` command line.

Exit codes: 0 success / validation pass, 1 validation fail, 2 model error
(e.g. unstable parameters), 64 usage or configuration error.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic
from .config import RunConfig, convert_value, parse_config
from .csvout import CsvWriter, write_csv
from .errors import ConfigError, HetqError, InsufficientData, UnstableSystem
from .metrics import JOB_COLUMNS, MetricsRecorder
from .network import Network
from .runner import mean_and_stderr, parallel_map, run_replication
from .validation import REPORT_COLUMNS, validate_closed_form, validate_simulation

log = logging.getLogger("hetq")

EXIT_OK, EXIT_FAIL, EXIT_MODEL, EXIT_USAGE = 0, 1, 2, 64
MIN_VALIDATION_REPLICATIONS = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- analytic ---------------------------------------------------------------

def write_analytic(config: RunConfig, out: Path) -> None:
    params = config.params
    dist = analytic.stationary_distribution(params, config.truncation_n)
    metrics = analytic.aggregate_metrics(params)
    rows = [(str(s), s.n1, s.n2, p) for s, p in dist.entries]
    rows.append(("residual", None, None, dist.residual))
    write_csv(out / "analytic.csv", ("state", "n1", "n2", "probability"), rows)
    row = metrics.as_row()
    write_csv(out / "metrics.csv", tuple(row), [tuple(row.values())])


def cmd_analytic(config: RunConfig) -> int:
    try:
        analytic.aggregate_metrics(config.params)
    except UnstableSystem as exc:
        log.error("%s", exc)
        return EXIT_MODEL
    write_analytic(config, _out_dir(config))
    return EXIT_OK


# --- simulate ---------------------------------------------------------------

def simulate_one(config: RunConfig, out: Path, replication: int = 0) -> Network:
    out.mkdir(parents=True, exist_ok=True)
    with CsvWriter(out / "jobs.csv", JOB_COLUMNS) as jobs:
        recorder = MetricsRecorder(warmup=config.warmup, job_sink=jobs.write)
        net = Network(config.sim_config(replication), recorder)
        net.run(config.horizon)
    write_csv(
        out / "load.csv",
        ("time", "queue_length", "jobs_in_system"),
        ((s.time, s.queue_length, s.jobs_in_system) for s in recorder.load),
    )
    series = recorder.rho_series(config.rho_window, config.horizon, config.sentinel_cap)
    write_csv(
        out / "rho.csv",
        ("window_end", "lambda_hat", "mu_hat", "rho_hat", "sentinel_flag"),
        ((s.window_end, s.lambda_hat, s.mu_hat, s.rho_hat, s.sentinel_flag) for s in series),
    )
    occ = net.occupancy()
    write_csv(out / "occupancy.csv", ("n1", "n2", "fraction"), ((s.n1, s.n2, p) for s, p in occ.entries))
    return net


def cmd_simulate(config: RunConfig) -> int:
    out = _out_dir(config)
    if config.replications == 1:
        simulate_one(config, out)
    else:
        for i in range(config.replications):
            simulate_one(config, out / f"rep_{i:03d}", i)
    return EXIT_OK


# --- validate ---------------------------------------------------------------

def cmd_validate(config: RunConfig) -> int:
    params = config.params
    reps = max(MIN_VALIDATION_REPLICATIONS, config.replications)
    try:
        report = validate_closed_form(params, config.truncation_n, config.tol)
        sim_report = validate_simulation(
            params,
            config.sim_config(),
            config.tol_abs,
            horizon=config.horizon,
            replications=reps,
            workers=config.workers,
        )
    except UnstableSystem as exc:
        log.error("%s", exc)
        return EXIT_MODEL
    except InsufficientData as exc:
        log.error("insufficient data: %s", exc)
        return EXIT_FAIL
    report.extend(sim_report)
    out = _out_dir(config)
    write_csv(out / "validation.csv", REPORT_COLUMNS, report.rows())
    text = report.text()
    (out / "validation.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if report.overall_pass else EXIT_FAIL


# --- sweep ------------------------------------------------------------------

SWEEP_COLUMNS = ("rho", "L", "Wq", "sim_wq_mean", "sim_wq_stderr", "status")


def parse_sweep(specs: list[str]) -> dict[str, list]:
    """``["lambda=0.5,1.0", "mu2=0.5,1"]`` -> ``{"lambda": [0.5, 1.0], "mu2": [0.5, 1.0]}``."""
    if not specs:
        raise UsageError("sweep needs at least one --sweep KEY=V1,V2,...")
    sweep = {}
    for spec in specs:
        if "=" not in spec:
            raise UsageError(f"bad sweep spec {spec!r}")
        key, raw = (s.strip() for s in spec.split("=", 1))
        if key in ("client_rates", "output_dir", "clients", "fixed_service1", "fixed_service2") or key in sweep:
            raise UsageError(f"cannot sweep {key!r}")
        try:
            values = [convert_value(key, v.strip()) for v in raw.split(",") if v.strip()]
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
        if not values:
            raise UsageError(f"no values for {key!r}")
        sweep[key] = values
    return sweep


def _sweep_task(task):
    cfg, replication = task
    return run_replication(cfg.sim_config(replication), cfg.horizon)


def cmd_sweep(config: RunConfig, sweep: dict[str, list], workers: int | None = None) -> int:
    out = _out_dir(config)
    keys = list(sweep)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(sweep[k] for k in keys))]
    configs, statuses = [], []
    for point in points:
        try:
            cfg = config.with_values(**point)
            statuses.append("ok" if cfg.params.rho < 1 else "unstable")
        except HetqError as exc:
            cfg = None
            statuses.append(f"error:{type(exc).__name__}")
        configs.append(cfg)

    tasks = [(cfg, i) for cfg in configs if cfg is not None for i in range(cfg.replications)]
    results = iter(parallel_map(_sweep_task, tasks, workers or config.workers))

    header = ("point", *keys, "lambda", "mu1", "mu2", *SWEEP_COLUMNS)
    rows = []
    for idx, (point, cfg, status) in enumerate(zip(points, configs, statuses)):
        pdir = out / f"point_{idx:03d}"
        pdir.mkdir(exist_ok=True)
        prefix = (idx, *(point[k] for k in keys))
        if cfg is None:
            rows.append((*prefix, None, None, None, None, None, None, None, None, status))
            continue
        reps = [next(results) for _ in range(cfg.replications)]
        write_csv(
            pdir / "replications.csv",
            ("replication", "p00_hat", "mean_queue_wait", "jobs", "littles_discrepancy"),
            ((r.replication, r.occupancy.p(0, 0), r.mean_wait, r.summary.count, r.littles_discrepancy) for r in reps),
        )
        rho, L, wq = cfg.params.rho, None, None
        if status == "ok":
            write_analytic(cfg, pdir)
            m = analytic.aggregate_metrics(cfg.params)
            L, wq = m.L, m.Wq
        sim_mean, sim_se = mean_and_stderr([r.mean_wait for r in reps])
        rows.append((*prefix, cfg.lam, cfg.mu1, cfg.mu2, rho, L, wq, sim_mean, sim_se, status))
    write_csv(out / "sweep_summary.csv", header, rows)
    return EXIT_OK


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetq", description="Heterogeneous two-server queue: analysis, simulation, validation.")
    parser.add_argument("command", choices=("analytic", "simulate", "validate", "sweep"))
    parser.add_argument("--config", required=True, metavar="PATH")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, metavar="U64")
    parser.add_argument("--truncation", type=int, metavar="N")
    parser.add_argument("--tol", type=float, metavar="FLOAT")
    parser.add_argument("--sweep", action="append", default=[], metavar="KEY=V1,V2",
                        help="sweep axis (repeatable; sweep command only)")
    parser.add_argument("--workers", type=int, metavar="N", help="worker processes for replications")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = parse_config(args.config)
        overrides = {}
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.truncation is not None:
            overrides["truncation_n"] = args.truncation
        if args.tol is not None:
            overrides["tol"] = args.tol
        if args.workers is not None:
            overrides["workers"] = args.workers
        if overrides:
            config = replace(config, **overrides)
        if args.command == "analytic":
            return cmd_analytic(config)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "validate":
            return cmd_validate(config)
        return cmd_sweep(config, parse_sweep(args.sweep))
    except (ConfigError, UsageError) as exc:
        print(f"hetq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HetqError as exc:
        print(f"hetq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
