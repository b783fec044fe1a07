"""Performance laboratory for a queue with two heterogeneous servers.

Closed-form steady state (:mod:`hetq.analytic`), a truncated-CTMC oracle
(:mod:`hetq.oracle`), a discrete-event simulator of clients, dispatcher and
servers (:mod:`hetq.network`), and cross-checks between them
(:mod:`hetq.validation`).
"""
from .analytic import (
    ClosedFormRatios,
    aggregate_metrics,
    balance_residuals,
    closed_form_ratios,
    normalization,
    stationary_distribution,
    tail_probability,
)
from .model import (
    AggregateMetrics,
    ModelParams,
    StateLabel,
    StationaryDistribution,
    is_stable,
    traffic_intensity,
    validate_params,
)
from .oracle import build_generator, occupancy_moments, stationary_solve

__version__ = "0.1.0"
