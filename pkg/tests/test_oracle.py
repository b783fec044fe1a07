import numpy as np
import pytest

from hetq.analytic import stationary_distribution
from hetq.errors import SingularSystem, TruncationTooSmall
from hetq.model import ModelParams, StateLabel, StationaryDistribution, canonical_states
from hetq.oracle import (
    GeneratorMatrix,
    build_generator,
    generator_residual,
    occupancy_moments,
    stationary_solve,
)

from conftest import GRID, RHOS, SPEED_RATIOS, grid_params


def test_generator_shape_and_first_row(base):
    g = build_generator(base, 2)
    assert g.rates.shape == (5, 5)
    assert g.rates[0].tolist() == [-1, 1, 0, 0, 0]


def test_generator_row_of_both_busy(base):
    g = build_generator(base, 2)
    row = g.rates[g.index(1, 1)]
    assert row[g.index(0, 1)] == 2.0
    assert row[g.index(1, 0)] == 1.0
    assert row[g.index(2, 1)] == 1.0
    assert row[g.index(1, 1)] == -4.0


def test_generator_full_transition_table(base):
    # hand enumeration of every off-diagonal entry for N = 3
    lam, mu1, mu2 = 1.0, 2.0, 1.0
    expected = {
        ((0, 0), (1, 0)): lam,
        ((1, 0), (0, 0)): mu1,
        ((1, 0), (1, 1)): lam,
        ((0, 1), (0, 0)): mu2,
        ((0, 1), (1, 1)): lam,
        ((1, 1), (0, 1)): mu1,
        ((1, 1), (1, 0)): mu2,
        ((1, 1), (2, 1)): lam,
        ((2, 1), (3, 1)): lam,
        ((2, 1), (1, 1)): mu1 + mu2,
        ((3, 1), (2, 1)): mu1 + mu2,
    }
    g = build_generator(base, 3)
    for i, s in enumerate(g.states):
        for j, t in enumerate(g.states):
            if i != j:
                assert g.rates[i, j] == expected.get(((s.n1, s.n2), (t.n1, t.n2)), 0.0)


@pytest.mark.parametrize("p", GRID)
def test_generator_rows_sum_to_zero(p):
    g = build_generator(p, 40)
    assert np.max(np.abs(g.rates.sum(axis=1))) < 1e-12
    off = g.rates[~np.eye(len(g.states), dtype=bool)]
    allowed = {0.0, p.lam, p.mu1, p.mu2, p.mu1 + p.mu2}
    assert set(np.unique(off).tolist()) <= allowed


def test_generator_truncation_too_small(base):
    with pytest.raises(TruncationTooSmall):
        build_generator(base, 1)


def test_stationary_solve_named_value(base):
    g = build_generator(base, 500)
    pi = stationary_solve(g)
    assert pi.source == "oracle"
    assert pi.p(0, 0) == pytest.approx(10 / 19, abs=1e-9)
    assert pi.total() == pytest.approx(1.0, abs=1e-12)
    assert generator_residual(g, pi) < 1e-11


@pytest.mark.parametrize("p", GRID)
def test_oracle_residual_and_agreement(p):
    g = build_generator(p, 500)
    pi = stationary_solve(g)
    assert generator_residual(g, pi) < 1e-11
    assert pi.max_abs_diff(stationary_distribution(p, 500)) < 1e-9


def test_truncation_convergence(base):
    small = stationary_solve(build_generator(base, 2)).p(0, 0)
    big = stationary_solve(build_generator(base, 500)).p(0, 0)
    assert abs(small - big) < 1e-2


def _tv(a, b):
    x, y = a.aligned(b)
    return 0.5 * float(np.abs(x - y).sum())


@pytest.mark.parametrize("rho", RHOS)
@pytest.mark.parametrize("ratio", SPEED_RATIOS)
def test_truncation_monotone(rho, ratio):
    p = grid_params(rho, ratio)
    pis = {n: stationary_solve(build_generator(p, n)) for n in (10, 20, 40, 80, 160)}
    tvs = [_tv(pis[n], pis[2 * n]) for n in (10, 20, 40, 80)]
    # once both truncations are exact to machine precision the distance is noise
    for a, b in zip(tvs, tvs[1:]):
        assert b < a or (a < 1e-14 and b < 1e-14)


def test_mistyped_inflow_generator_disagrees():
    p = ModelParams(2, 3, 1)
    wrong = stationary_solve(build_generator(p, 500, mistyped_inflow=True))
    assert wrong.max_abs_diff(stationary_distribution(p, 500)) > 1e-3


def test_singular_generator_rejected():
    # two disconnected states: the balance system has no unique solution
    states = (StateLabel(0, 0), StateLabel(1, 0), StateLabel(0, 1))
    rates = np.zeros((3, 3))
    rates[1, 2], rates[2, 1] = 1.0, 1.0
    rates[np.diag_indices(3)] = -rates.sum(axis=1)
    with pytest.raises(SingularSystem):
        stationary_solve(GeneratorMatrix(states, rates, 1))


def _point_mass(n1, n2):
    states = tuple(canonical_states(3))
    probs = np.array([1.0 if (s.n1, s.n2) == (n1, n2) else 0.0 for s in states])
    return StationaryDistribution(states, probs, 3, "oracle")


def test_occupancy_moments_examples(base):
    L, Lq, u1, u2 = occupancy_moments(stationary_distribution(base, 500))
    assert L == pytest.approx(27 / 38, abs=1e-8)
    assert occupancy_moments(_point_mass(0, 0)) == (0, 0, 0, 0)
    assert occupancy_moments(_point_mass(1, 1)) == (2, 0, 1, 1)
    assert occupancy_moments(_point_mass(3, 1)) == (4, 2, 1, 1)
