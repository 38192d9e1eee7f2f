"""Parameter containers, validation, stationary laws, and path sampling."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hmmdiv import (
    ModelAParams,
    ModelBParams,
    TransitionMatrix,
    as_chain,
    emission_density,
    lift_four_state,
    sample_path,
    stationary_distribution,
    transition_matrix,
    validate_model,
)
from hmmdiv.models import mix_seed
from hmmdiv.cases import CASES

CASE1_GEN, CASE1_ALT = CASES[1]


def model_b(**overrides):
    base = dict(p01=0.4, p10=0.6, mu=(2.0, 1.0), phi=0.1, psi1=1.0,
                psi2=0.0, sigma=1.0)
    base.update(overrides)
    return ModelBParams(**base)


valid_model_b = st.builds(
    ModelBParams,
    p01=st.floats(0.05, 0.95),
    p10=st.floats(0.05, 0.95),
    mu=st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
    phi=st.floats(-0.9, 0.9),
    psi1=st.floats(-1.5, 1.5),
    psi2=st.floats(-1.5, 1.5),
    sigma=st.floats(0.2, 3.0),
)


# --- validate_model ---------------------------------------------------------


def test_validate_rejects_zero_sigma():
    problems = validate_model(model_b(sigma=0.0))
    assert any("sigma must be positive" in p for p in problems)


def test_validate_rejects_unit_phi():
    problems = validate_model(model_b(phi=1.0))
    assert any("|phi| < 1 required" in p for p in problems)


def test_validate_accepts_benchmark_params():
    assert validate_model(CASE1_ALT) == []
    for t1, t in CASES.values():
        assert validate_model(t1) == [] and validate_model(t) == []


def test_validate_reports_every_violation():
    problems = validate_model(model_b(p01=1.5, phi=2.0, sigma=-1.0))
    assert len(problems) == 3


# --- stationary distributions -----------------------------------------------


def test_stationary_symmetric_chain():
    t = transition_matrix(model_b(p01=0.5, p10=0.5))
    np.testing.assert_allclose(stationary_distribution(t), [0.5, 0.5], atol=1e-12)


def test_stationary_two_state_case1():
    # balance: pi0 * p01 = pi1 * p10 => pi = (p10, p01) / (p01 + p10)
    t = transition_matrix(CASE1_GEN)
    pi = stationary_distribution(t)
    np.testing.assert_allclose(pi, [0.6 / 1.01, 0.41 / 1.01], atol=1e-10)
    np.testing.assert_allclose(pi, [0.594059, 0.405941], atol=1e-6)


def test_stationary_four_state_lift_case1():
    lift = lift_four_state(CASE1_GEN)
    pi = stationary_distribution(lift.transition)
    np.testing.assert_allclose(
        pi, [0.350495, 0.243564, 0.243564, 0.162376], atol=1e-6
    )
    # cross-check against the eigenvector of the transposed matrix
    vals, vecs = np.linalg.eig(lift.transition.entries.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    np.testing.assert_allclose(pi, v / v.sum(), atol=1e-10)


def test_stationary_fixed_point_for_all_benchmark_chains():
    for t1, t in CASES.values():
        for m in (t1, t):
            for tr in (transition_matrix(m), lift_four_state(m).transition):
                pi = stationary_distribution(tr)
                assert np.max(np.abs(pi @ tr.entries - pi)) <= 1e-10


def test_transition_matrix_rejects_bad_rows():
    with pytest.raises(ValueError):
        TransitionMatrix(np.array([[0.7, 0.7], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        TransitionMatrix(np.array([[1.2, -0.2], [0.5, 0.5]]))


# --- four-state lift ----------------------------------------------------------


def test_lift_case1_first_row():
    lift = lift_four_state(CASE1_GEN)
    np.testing.assert_allclose(
        lift.transition.entries[0], [0.59, 0.41, 0.0, 0.0], atol=1e-12
    )


@given(valid_model_b)
def test_lift_rows_and_pi_normalized(m):
    lift = lift_four_state(m)
    np.testing.assert_allclose(lift.transition.entries.sum(axis=1), 1.0, atol=1e-12)
    assert abs(lift.pi.sum() - 1.0) <= 1e-12
    assert np.all(lift.pi >= 0)


def test_lift_pi_is_stationary():
    for t1, t in CASES.values():
        for m in (t1, t):
            lift = lift_four_state(m)
            np.testing.assert_allclose(
                lift.pi @ lift.transition.entries, lift.pi, atol=1e-12
            )


def test_lift_marginal_matches_two_state_stationary():
    # frequencies of the current regime from the lifted sampler agree with
    # the 2-state stationary law
    m = CASE1_GEN
    path = sample_path(m, 100000, seed=11)
    pi = stationary_distribution(transition_matrix(m))
    freq = np.mean(path.x == 0)
    se = math.sqrt(pi[0] * (1 - pi[0]) / path.x.size)
    assert abs(freq - pi[0]) <= 3 * se


# --- emission density ---------------------------------------------------------


def test_emission_peak_value():
    m = model_b(sigma=0.7)
    mean = m.psi2 * m.mu[0] + m.psi1 * m.mu[1] + m.phi * 0.3
    val = emission_density(m, 0, 1, mean, 0.3)
    assert math.isclose(val, 1.0 / (0.7 * math.sqrt(2 * math.pi)), rel_tol=1e-12)


@given(valid_model_b, st.floats(-5, 5), st.floats(0, 4))
def test_emission_symmetric_about_mean(m, y_prev, c):
    mean = m.psi2 * m.mu[1] + m.psi1 * m.mu[0] + m.phi * y_prev
    left = emission_density(m, 1, 0, mean - c, y_prev)
    right = emission_density(m, 1, 0, mean + c, y_prev)
    assert math.isclose(left, right, rel_tol=1e-12)


def test_emission_case1_value():
    # alternative model of pair 1: mean psi1*mu[0] = 1, sd 2, y = 3
    val = emission_density(CASE1_ALT, 0, 0, 3.0, 0.0)
    expect = math.exp(-0.5) / (2.0 * math.sqrt(2 * math.pi))
    assert math.isclose(val, expect, rel_tol=1e-12)
    assert math.isclose(val, 0.120985, abs_tol=1e-6)


@given(valid_model_b, st.integers(0, 1), st.integers(0, 1),
       st.floats(-4, 4), st.floats(-4, 4))
def test_emission_positive_and_finite(m, i, j, y, y_prev):
    # ranges chosen so the density stays above the double-precision floor
    assume(m.sigma >= 0.5)
    val = emission_density(m, i, j, y, y_prev)
    assert val > 0 and math.isfinite(val)


def test_family_a_emission_ignores_previous_state():
    m = ModelAParams(p00=0.7, p11=0.6, mu=(1.0, -1.0), psi=(0.2, 0.1),
                     sigma=(1.0, 1.5))
    assert emission_density(m, 0, 1, 0.4, 0.9) == emission_density(m, 1, 1, 0.4, 0.9)


# --- sampling ----------------------------------------------------------------


def test_sample_path_deterministic():
    a = sample_path(CASE1_GEN, 500, burn_in=50, seed=42)
    b = sample_path(CASE1_GEN, 500, burn_in=50, seed=42)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
    assert a.y_prev == b.y_prev
    c = sample_path(CASE1_GEN, 500, burn_in=50, seed=43)
    assert not np.array_equal(a.y, c.y)


def test_sample_path_regime_frequencies():
    path = sample_path(CASE1_GEN, 100000, seed=3)
    p0 = 0.594059
    se = math.sqrt(p0 * (1 - p0) / path.x.size)
    assert abs(np.mean(path.x == 0) - p0) <= 3 * se


def test_sample_path_iid_reduction():
    # equal regime means with no feedback collapse to i.i.d. Gaussian draws
    m = model_b(mu=(1.3, 1.3), phi=0.0, psi1=1.0, psi2=0.0, sigma=0.8)
    path = sample_path(m, 40000, seed=5)
    assert abs(path.y.mean() - 1.3) <= 3 * 0.8 / math.sqrt(path.y.size)
    assert abs(path.y.std(ddof=1) - 0.8) <= 0.02


def test_sample_path_records_regimes_not_pair_states():
    path = sample_path(CASE1_GEN, 1000, seed=9)
    assert set(np.unique(path.x)) <= {0, 1}


def test_mix_seed_spreads_replicates():
    seeds = {mix_seed(0, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert mix_seed(7, 3) == mix_seed(7, 3)
    assert mix_seed(7, 3) != mix_seed(8, 3)


# --- chain reduction -----------------------------------------------------------


def test_as_chain_four_state_intercepts():
    m = model_b(mu=(2.0, -1.0), psi1=0.7, psi2=0.3)
    chain = as_chain(m)
    mu = np.array(m.mu)
    expect = [0.3 * mu[i] + 0.7 * mu[j] for i in (0, 1) for j in (0, 1)]
    np.testing.assert_allclose(chain.c, expect, atol=1e-12)
    assert chain.d == 4


def test_as_chain_family_a_dimension():
    m = ModelAParams(p00=0.7, p11=0.6, mu=(1.0, -1.0), psi=(0.2, 0.1),
                     sigma=(1.0, 1.5))
    chain = as_chain(m)
    assert chain.d == 2
    np.testing.assert_allclose(chain.c, m.mu, atol=1e-15)


def test_as_chain_rejects_invalid():
    with pytest.raises(ValueError):
        as_chain(model_b(sigma=-2.0))
