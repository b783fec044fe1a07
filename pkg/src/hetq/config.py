"""Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment, unknown keys are rejected.

Keys and defaults::

    lambda                  aggregate arrival rate (required unless client_rates given)
    mu1, mu2                fast / slow service rates (required)
    clients = 1             number of clients sharing lambda equally
    client_rates            comma-separated per-client rates (sum must equal lambda)
    session_on = inf        on-period length; inf disables sessions
    session_off = 0
    session_distribution = deterministic   (or exponential)
    propagation_delay_mean = 0.05
    propagation_jitter = 0.01
    processing_delay = 0
    fixed_service1, fixed_service2         constant service times (test hook, both or neither)
    seed = 42
    horizon = 1e6
    warmup = 1% of horizon
    load_sample_period = 1.0
    rho_window = 1.0
    sentinel_cap = 1e9
    truncation_n = 500
    replications = 1
    workers = 1
    tol = 1e-9              closed-form / oracle tolerance for validate
    tol_abs = 0.01          occupancy tolerance for simulation validation
    output_dir = out
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigTypeError, HetqError, InvariantViolation, MissingFile, UnknownKey
from .model import ModelParams, validate_params
from .network import SimConfig, WorkloadConfig


@dataclass(frozen=True)
class RunConfig:
    lam: float
    mu1: float
    mu2: float
    client_rates: tuple[float, ...]
    session_on: float = math.inf
    session_off: float = 0.0
    session_distribution: str = "deterministic"
    propagation_delay_mean: float = 0.05
    propagation_jitter: float = 0.01
    processing_delay: float = 0.0
    fixed_service: Optional[tuple[float, float]] = None
    seed: int = 42
    horizon: float = 1e6
    warmup: float = 1e4
    load_sample_period: float = 1.0
    rho_window: float = 1.0
    sentinel_cap: float = 1e9
    truncation_n: int = 500
    replications: int = 1
    workers: int = 1
    tol: float = 1e-9
    tol_abs: float = 0.01
    output_dir: str = "out"

    def __post_init__(self):
        try:
            validate_params(self.lam, self.mu1, self.mu2)
            self.workload
        except InvariantViolation:
            raise
        except HetqError as exc:
            raise InvariantViolation(f"{type(exc).__name__}: {exc}") from None
        if not math.isclose(math.fsum(self.client_rates), self.lam, rel_tol=1e-9):
            raise InvariantViolation(f"client_rates sum to {math.fsum(self.client_rates)}, lambda is {self.lam}")
        if not (self.horizon > self.warmup >= 0) or not math.isfinite(self.horizon):
            raise InvariantViolation(f"need horizon > warmup >= 0, got horizon={self.horizon}, warmup={self.warmup}")
        for name in ("load_sample_period", "rho_window", "sentinel_cap", "tol", "tol_abs"):
            if not (getattr(self, name) > 0):
                raise InvariantViolation(f"{name} must be positive")
        if self.replications < 1 or self.workers < 1:
            raise InvariantViolation("replications and workers must be >= 1")
        if self.truncation_n < 1:
            raise InvariantViolation("truncation_n must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise InvariantViolation("seed must be an unsigned 64-bit integer")
        if self.processing_delay < 0:
            raise InvariantViolation("processing_delay must be >= 0")
        if self.fixed_service is not None and any(not (s > 0) for s in self.fixed_service):
            raise InvariantViolation("fixed service times must be positive")

    @property
    def params(self) -> ModelParams:
        return validate_params(self.lam, self.mu1, self.mu2)

    @property
    def workload(self) -> WorkloadConfig:
        return WorkloadConfig(
            client_rates=self.client_rates,
            session_on=self.session_on,
            session_off=self.session_off,
            session_distribution=self.session_distribution,
            propagation_delay_mean=self.propagation_delay_mean,
            propagation_jitter=self.propagation_jitter,
        )

    def sim_config(self, replication: int = 0, **overrides) -> SimConfig:
        kwargs = dict(
            mu1=self.mu1,
            mu2=self.mu2,
            workload=self.workload,
            seed=self.seed,
            replication=replication,
            warmup=self.warmup,
            load_sample_period=self.load_sample_period,
            processing_delay=self.processing_delay,
            fixed_service=self.fixed_service,
        )
        kwargs.update(overrides)
        return SimConfig(**kwargs)

    def with_values(self, **values) -> RunConfig:
        """Copy with some keys replaced (config-file names accepted, e.g. ``lambda``).

        Changing ``lambda`` rescales ``client_rates`` proportionally.
        """
        values = dict(values)
        if "lambda" in values:
            values["lam"] = values.pop("lambda")
        if "lam" in values and "client_rates" not in values:
            scale = float(values["lam"]) / self.lam
            values["client_rates"] = tuple(r * scale for r in self.client_rates)
        return dataclasses.replace(self, **values)


_FLOAT_KEYS = {
    "lambda",
    "mu1",
    "mu2",
    "session_on",
    "session_off",
    "propagation_delay_mean",
    "propagation_jitter",
    "processing_delay",
    "fixed_service1",
    "fixed_service2",
    "horizon",
    "warmup",
    "load_sample_period",
    "rho_window",
    "sentinel_cap",
    "tol",
    "tol_abs",
}
_INT_KEYS = {"clients", "seed", "truncation_n", "replications", "workers"}
_STR_KEYS = {"session_distribution", "output_dir"}
_LIST_KEYS = {"client_rates"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _LIST_KEYS


def convert_value(key: str, raw: str):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            value = int(raw, 0)
            return value
        if key in _LIST_KEYS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if not items:
                raise ValueError("empty list")
            return tuple(float(x) for x in items)
    except ValueError:
        raise ConfigTypeError(f"{key}: cannot parse {raw!r}") from None
    return raw


def parse_text(text: str) -> dict:
    """Raw typed values from config text (no defaults, no cross-key checks)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigTypeError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise UnknownKey(key)
        if key in values:
            raise InvariantViolation(f"line {lineno}: duplicate key {key!r}")
        values[key] = convert_value(key, raw)
    return values


def build_config(values: dict) -> RunConfig:
    values = dict(values)
    for req in ("mu1", "mu2"):
        if req not in values:
            raise InvariantViolation(f"missing required key {req!r}")
    rates = values.pop("client_rates", None)
    clients = values.pop("clients", None)
    if rates is not None and clients is not None and clients != len(rates):
        raise InvariantViolation("clients disagrees with the length of client_rates")
    if "lambda" not in values:
        if rates is None:
            raise InvariantViolation("missing required key 'lambda'")
        values["lambda"] = math.fsum(rates)
    lam = values.pop("lambda")
    if rates is None:
        n = 1 if clients is None else clients
        if n < 1:
            raise InvariantViolation("clients must be >= 1")
        rates = tuple([lam / n] * n)
    fs = (values.pop("fixed_service1", None), values.pop("fixed_service2", None))
    if (fs[0] is None) != (fs[1] is None):
        raise InvariantViolation("fixed_service1 and fixed_service2 must be given together")
    fixed = None if fs[0] is None else fs
    if "warmup" not in values:
        values["warmup"] = 0.01 * values.get("horizon", RunConfig.horizon)
    return RunConfig(lam=lam, client_rates=rates, fixed_service=fixed, **values)


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    return build_config(parse_text(path.read_text(encoding="utf-8")))
