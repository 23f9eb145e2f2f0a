import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplan.ambiguity import (AmbiguityError, default_radius, distance_matrix, family_normalizers,
                                moment_ambiguity, realization_distance, split_supports, transport_cost,
                                wasserstein_ambiguity, wasserstein_distance)
from gridplan.fixtures import fixture_model, fixture_scenarios
from oracles import brute_force_transport, realization_distance_loops


def test_realization_distance_cases():
    assert realization_distance([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert realization_distance([0.0], [1.0], L=1) == 1.0
    assert realization_distance([1.0, 2.0], [3.0, 5.0], L=1) == 5.0
    assert realization_distance([1.0, 2.0], [3.0, 5.0], L=2) == 13.0


def test_realization_distance_rejects_bad_input():
    with pytest.raises(AmbiguityError):
        realization_distance([1.0, 2.0], [1.0])
    with pytest.raises(AmbiguityError):
        realization_distance([1.0], [1.0], L=0.5)


def test_wasserstein_cases():
    P = [np.array([0.0]), np.array([2.0])]
    assert wasserstein_distance(P, [0.5, 0.5], P, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-12)
    assert wasserstein_distance([np.array([0.0])], [1.0], [np.array([1.0])], [1.0]) == pytest.approx(1.0)
    assert wasserstein_distance(P, [0.5, 0.5], [np.array([1.0])], [1.0]) == pytest.approx(1.0)


def test_transport_rejects_bad_marginals():
    with pytest.raises(AmbiguityError):
        transport_cost(np.zeros((2, 2)), [0.5, 0.6], [0.5, 0.5])
    with pytest.raises(AmbiguityError):
        transport_cost(np.zeros((2, 2)), [0.5, 0.5], [1.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_transport_matches_enumeration(m, n, seed):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(0, 10, (m, n))
    p = rng.dirichlet(np.ones(m))
    q = rng.dirichlet(np.ones(n))
    assert transport_cost(cost, p, q)[0] == pytest.approx(brute_force_transport(cost, p, q), abs=1e-8)


def test_default_radius():
    assert default_radius(np.zeros((1, 1))) == 0.0
    D = np.array([[realization_distance([0.0], [1.0])], [realization_distance([2.0], [1.0])]])
    assert default_radius(D) == 1.0
    with pytest.raises(AmbiguityError):
        default_radius(np.zeros((0, 0)))


def test_split_supports():
    M, K, q = split_supports(20, 5, seed=3)
    assert len(M) == 15 and len(K) == 5 and np.allclose(q, 0.2)
    assert sorted(M + K) == list(range(20))
    assert split_supports(20, 5, seed=3)[:2] == (M, K)
    M1, K1, _ = split_supports(6, 5, seed=0)
    assert len(M1) == 1
    with pytest.raises(AmbiguityError):
        split_supports(5, 5, 0)


def test_fixture_distance_matrix_double_loop():
    sset = fixture_scenarios(0, 10, n_rep_days=2, hours_per_day=6)
    wass = wasserstein_ambiguity(sset, k_nominal=5, seed=1)
    norm = family_normalizers(sset)
    expect = np.array([[realization_distance_loops(sset.scenarios[i], sset.scenarios[j], 1.0, norm)
                        for j in wass.support_K] for i in wass.support_M])
    assert np.allclose(wass.D, expect, rtol=1e-12, atol=1e-12)
    assert wass.radius == pytest.approx(expect.max(), rel=1e-12)
    assert set(wass.support_M).isdisjoint(wass.support_K)


def test_identical_supports_have_zero_diagonal():
    sset = fixture_scenarios(0, 4, n_rep_days=2, hours_per_day=6)
    D = distance_matrix(sset, range(4), range(4))
    assert np.all(np.diag(D) == 0.0) and np.all(D[~np.eye(4, dtype=bool)] > 0)


def test_moment_box_brackets_means():
    sset = fixture_scenarios(0, 5, n_rep_days=2, hours_per_day=6)
    amb = moment_ambiguity(sset, fixture_model(), kappa=3.0)
    for f in ("power", "gas", "cf"):
        assert np.all(amb.lower[f] <= 0) and np.all(amb.upper[f] >= 0)
    assert amb.contains_mean_of(sset)


def test_wasserstein_spec_validation():
    sset = fixture_scenarios(0, 3, n_rep_days=1, hours_per_day=4)
    with pytest.raises(AmbiguityError):
        wasserstein_ambiguity(sset, [0, 1], [2], radius=-1.0)
    with pytest.raises(AmbiguityError):
        wasserstein_ambiguity(sset)
