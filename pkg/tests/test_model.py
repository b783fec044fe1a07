import math

import pytest
from hypothesis import given, strategies as st

from hetq.errors import DomainError, NonPositiveRate, ServerOrderViolation
from hetq.model import (
    ModelParams,
    StateLabel,
    canonical_states,
    is_reachable,
    is_stable,
    state_index,
    traffic_intensity,
    validate_params,
)
from hetq.oracle import build_generator

rates = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


def test_validate_params_accepts_ordered_rates():
    p = validate_params(1.0, 2.0, 1.0)
    assert (p.lam, p.mu1, p.mu2) == (1.0, 2.0, 1.0)


def test_validate_params_rejects_swapped_servers():
    with pytest.raises(ServerOrderViolation):
        validate_params(1.0, 1.0, 2.0)


@pytest.mark.parametrize(
    "args", [(0.0, 2.0, 1.0), (-1.0, 2.0, 1.0), (1.0, 0.0, 0.0), (math.inf, 2.0, 1.0), (math.nan, 2.0, 1.0)]
)
def test_validate_params_rejects_bad_rates(args):
    with pytest.raises(NonPositiveRate):
        validate_params(*args)


def test_equal_rates_allowed():
    assert validate_params(1.0, 1.5, 1.5).mu1 == 1.5


@pytest.mark.parametrize(
    "lam, mu1, mu2, rho",
    [(1, 2, 1, 1 / 3), (3, 2, 1, 1.0), (2, 3, 1, 0.5)],
)
def test_traffic_intensity(lam, mu1, mu2, rho):
    assert traffic_intensity(validate_params(lam, mu1, mu2)) == rho


@pytest.mark.parametrize("lam, stable", [(1, True), (3, False), (4, False)])
def test_is_stable(lam, stable):
    assert is_stable(validate_params(lam, 2, 1)) is stable


@given(rates, rates, rates, st.floats(min_value=1e-3, max_value=1e3))
def test_traffic_intensity_scale_invariant(lam, a, b, c):
    mu1, mu2 = max(a, b), min(a, b)
    p = ModelParams(lam, mu1, mu2)
    q = ModelParams(lam * c, mu1 * c, mu2 * c)
    assert math.isclose(traffic_intensity(p), traffic_intensity(q), rel_tol=1e-12)


@pytest.mark.parametrize("n1, n2", [(0, 0), (1, 0), (0, 1), (1, 1), (7, 1)])
def test_reachable_labels(n1, n2):
    assert StateLabel(n1, n2).n1 == n1


@pytest.mark.parametrize("n1, n2", [(2, 0), (5, 0), (0, 2), (-1, 1), (1, -1)])
def test_unreachable_labels_rejected(n1, n2):
    assert not is_reachable(n1, n2)
    with pytest.raises(DomainError):
        StateLabel(n1, n2)


def test_canonical_order_matches_index():
    for i, s in enumerate(canonical_states(10)):
        assert state_index(s.n1, s.n2) == i


def test_generator_states_are_reachable(base):
    gen = build_generator(base, 30)
    assert all(is_reachable(s.n1, s.n2) for s in gen.states)
