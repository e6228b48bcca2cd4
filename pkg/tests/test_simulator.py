import math

import numpy as np
import pytest

from mm1ps.exact import atom_mass, conditional_cdf, lattice_atom, mean_sojourn
from mm1ps.model import DomainError, ModelParams, RunawayError
from mm1ps.simulator import (
    BLOCK,
    EstimationError,
    SimConfig,
    empirical_cdf,
    empirical_density,
    sample_sojourn,
)


@pytest.fixture(scope="module")
def half_one():
    return sample_sojourn(SimConfig(rho=0.5, x=1.0, replications=200_000, seed=11))


def test_mean_within_ci():
    s = sample_sojourn(SimConfig(rho=0.5, x=2.0, replications=200_000, seed=3))
    assert abs(s.mean - mean_sojourn(2.0, ModelParams(0.5))) <= s.ci_halfwidth
    assert s.ci_halfwidth == pytest.approx(1.959963984540054 * math.sqrt(s.variance / len(s)), rel=1e-15)


def test_support_and_lattice(half_one):
    s = half_one
    assert np.all(s.values >= s.x)
    assert s.mean >= s.x
    on = s.lattice >= 0
    assert np.array_equal(s.values[on], (s.lattice[on] + 1) * s.x)
    # the atom at t = x is hit exactly, with no rounding
    assert s.atom_fraction == s.empty_no_arrival


def test_lattice_fractions(half_one):
    s, p = half_one, ModelParams(0.5)
    n = len(s)
    for k in range(3):
        m = lattice_atom(1.0, p, k)
        assert abs(s.lattice_fraction(k) - m) <= 4 * math.sqrt(m * (1 - m) / n)
    assert lattice_atom(1.0, p, 0) == atom_mass(1.0, p)


def test_cdf_against_exact(half_one):
    s = half_one
    ts = np.linspace(1.0, 12.0, 45)
    ref = conditional_cdf(ts, 1.0, ModelParams(0.5))
    dkw = math.sqrt(math.log(2 / 0.01) / (2 * len(s)))
    assert np.max(np.abs(empirical_cdf(s, ts) - ref)) <= dkw


def test_empirical_cdf_shape(half_one):
    c = empirical_cdf(half_one, [0.0, 0.999, 1.0, 5.0, 1e9])
    assert c[0] == 0 and c[1] == 0 and c[-1] == 1
    assert np.all(np.diff(c) >= 0)


def test_density_estimates(half_one):
    grid = np.linspace(1.05, 10.0, 40)
    est = empirical_density(half_one, grid, bandwidth=0.05)
    assert all(v >= 0 and se >= 0 for _, v, se in est)
    assert [t for t, _, _ in est] == list(grid)
    # default bandwidth also works
    assert len(empirical_density(half_one, [3.0])) == 1


def test_zero_work():
    s = sample_sojourn(SimConfig(rho=0.3, x=0.0, replications=100_000, seed=5))
    assert np.all(s.values == 0.0)
    m = 0.7
    assert abs(s.empty_no_arrival - m) <= 4 * math.sqrt(m * (1 - m) / len(s))
    with pytest.raises(EstimationError):
        empirical_density(s, [0.1])


def test_deterministic():
    cfg = SimConfig(rho=0.7, x=0.5, replications=5000, seed=42)
    a, b = sample_sojourn(cfg), sample_sojourn(cfg)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.lattice, b.lattice)
    c = sample_sojourn(SimConfig(rho=0.7, x=0.5, replications=5000, seed=43))
    assert not np.array_equal(a.values, c.values)


def test_blocks_are_independent_streams():
    small = sample_sojourn(SimConfig(rho=0.4, x=0.3, replications=BLOCK, seed=9))
    big = sample_sojourn(SimConfig(rho=0.4, x=0.3, replications=BLOCK + 100, seed=9))
    assert np.array_equal(big.values[:BLOCK], small.values)


def test_work_conservation():
    s = sample_sojourn(SimConfig(rho=0.9, x=2.0, replications=2000, seed=1, check_conservation=True))
    assert len(s) == 2000


def test_runaway():
    with pytest.raises(RunawayError):
        sample_sojourn(SimConfig(rho=0.9, x=50.0, replications=100, seed=1, max_events=3))


@pytest.mark.parametrize(
    "kw",
    [dict(rho=1.0, x=1.0), dict(rho=0.0, x=1.0), dict(rho=0.5, x=-1.0), dict(rho=0.5, x=1.0, replications=0),
     dict(rho=0.5, x=1.0, seed=-1), dict(rho=0.5, x=1.0, max_events=0)],
)
def test_config_domain(kw):
    with pytest.raises(DomainError):
        SimConfig(**kw)


def test_bad_bandwidth(half_one):
    with pytest.raises(DomainError):
        empirical_density(half_one, [2.0], bandwidth=0.0)
