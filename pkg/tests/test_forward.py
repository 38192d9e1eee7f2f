"""Likelihood engines: normalized filter, matrix product, path-sum oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmmdiv import (
    DegenerateInputError,
    LinearGaussianChain,
    ModelAParams,
    ModelBParams,
    as_chain,
    brute_force_log_likelihood,
    density_matrix,
    forward_init,
    forward_step,
    log_likelihood,
    matrix_log_likelihood,
    per_step_log_ratios,
    sample_path,
)
from hmmdiv.cases import CASES
from hmmdiv.forward import batch_log_normalizers

CASE1_GEN, CASE1_ALT = CASES[1]


def chain_with_pdf_values(values, at_y=0.0):
    """A 1-step chain whose emission pdfs at y=at_y equal `values` exactly:
    center every state at at_y and set the scale to 1/(value*sqrt(2pi))."""
    values = np.asarray(values, dtype=float)
    d = values.size
    return LinearGaussianChain(
        pi=np.full(d, 1.0 / d),
        transition=np.full((d, d), 1.0 / d),
        c=np.full(d, at_y),
        b=np.zeros(d),
        s=1.0 / (values * math.sqrt(2.0 * math.pi)),
    )


def iid_model(mu, sigma):
    return ModelBParams(p01=0.4, p10=0.6, mu=(mu, mu), phi=0.0, psi1=1.0,
                        psi2=0.0, sigma=sigma)


def random_model(rng, family):
    if family == "A":
        return ModelAParams(
            p00=rng.uniform(0.1, 0.9),
            p11=rng.uniform(0.1, 0.9),
            mu=(rng.uniform(-2, 2), rng.uniform(-2, 2)),
            psi=(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)),
            sigma=(rng.uniform(0.4, 2.5), rng.uniform(0.4, 2.5)),
        )
    return ModelBParams(
        p01=rng.uniform(0.1, 0.9),
        p10=rng.uniform(0.1, 0.9),
        mu=(rng.uniform(-2, 2), rng.uniform(-2, 2)),
        phi=rng.uniform(-0.8, 0.8),
        psi1=rng.uniform(-1.2, 1.2),
        psi2=rng.uniform(-1.2, 1.2),
        sigma=rng.uniform(0.4, 2.5),
    )


# --- initialization -----------------------------------------------------------


def test_forward_init_equal_emissions_returns_pi():
    m = iid_model(1.0, 1.0)  # every pair state emits identically
    chain = as_chain(m)
    state = forward_init(m, 0.3)
    np.testing.assert_allclose(state.weights, chain.pi, atol=1e-14)


def test_forward_init_hand_case():
    chain = chain_with_pdf_values([0.3, 0.1])
    state = forward_init(chain, 0.0)
    np.testing.assert_allclose(state.weights, [0.75, 0.25], atol=1e-12)
    assert math.isclose(state.log_likelihood, math.log(0.2), abs_tol=1e-12)
    assert state.t == 1


def test_forward_init_matches_oracle_on_length_one():
    y1 = 0.7
    got = forward_init(CASE1_GEN, y1).log_likelihood
    want = brute_force_log_likelihood(CASE1_GEN, np.array([y1]))
    assert abs(got - want) <= 1e-12


# --- stepping -----------------------------------------------------------------


def test_forward_step_hand_case():
    # equal emissions c across both states: weights evolve by the transition
    # alone and the likelihood gains log c
    c = 0.154
    chain = LinearGaussianChain(
        pi=np.array([0.5, 0.5]),
        transition=np.array([[0.8, 0.2], [0.2, 0.8]]),
        c=np.zeros(2),
        b=np.zeros(2),
        s=np.full(2, 1.0 / (c * math.sqrt(2.0 * math.pi))),
    )
    from hmmdiv.forward import ForwardState

    state = ForwardState(weights=np.array([0.75, 0.25]), log_likelihood=0.0, t=1)
    nxt = forward_step(chain, state, 0.0, 0.0)
    np.testing.assert_allclose(nxt.weights, [0.65, 0.35], atol=1e-12)
    assert math.isclose(nxt.log_likelihood, math.log(c), abs_tol=1e-12)
    assert nxt.t == 2


def test_forward_step_deterministic():
    path = sample_path(CASE1_GEN, 20, seed=1)
    s1 = forward_init(CASE1_GEN, path.y[0], path.y_prev)
    s2 = forward_init(CASE1_GEN, path.y[0], path.y_prev)
    for t in range(1, 20):
        s1 = forward_step(CASE1_GEN, s1, path.y[t], path.y[t - 1])
        s2 = forward_step(CASE1_GEN, s2, path.y[t], path.y[t - 1])
    assert np.array_equal(s1.weights, s2.weights)
    assert s1.log_likelihood == s2.log_likelihood


@given(st.integers(0, 2 ** 31), st.integers(2, 25))
@settings(max_examples=40)
def test_forward_weights_stay_normalized(seed, n):
    rng = np.random.default_rng(seed)
    m = random_model(rng, "B")
    path = sample_path(m, n, burn_in=5, seed=seed)
    state = forward_init(m, path.y[0], path.y_prev)
    assert abs(state.weights.sum() - 1.0) <= 1e-12
    for t in range(1, n):
        state = forward_step(m, state, path.y[t], path.y[t - 1])
        assert abs(state.weights.sum() - 1.0) <= 1e-12
        assert np.all(state.weights >= 0) and np.all(state.weights <= 1)


# --- full-sequence likelihoods --------------------------------------------------


def test_log_likelihood_length_one():
    chain = as_chain(CASE1_GEN)
    y1 = -0.4
    want = math.log(float((chain.pi * chain.emission_pdf(y1, 0.0)).sum()))
    assert abs(log_likelihood(CASE1_GEN, np.array([y1])) - want) <= 1e-12


def test_log_likelihood_matches_path_sum():
    rng = np.random.default_rng(7)
    m = random_model(rng, "B")
    y = rng.normal(size=6)
    assert abs(log_likelihood(m, y) - brute_force_log_likelihood(m, y)) <= 1e-9


def test_log_likelihood_iid_reduction():
    m = iid_model(0.7, 1.3)
    rng = np.random.default_rng(8)
    y = rng.normal(0.7, 1.3, size=200)
    want = sum(
        -0.5 * ((v - 0.7) / 1.3) ** 2 - math.log(1.3 * math.sqrt(2 * math.pi))
        for v in y
    )
    assert abs(log_likelihood(m, y) - want) <= 1e-9


def test_log_likelihood_long_sequence_finite():
    for t1, t in CASES.values():
        path = sample_path(t1, 100000, seed=13)
        for m in (t1, t):
            val = log_likelihood(m, path.y, path.y_prev)
            assert math.isfinite(val)


def test_underflow_raises_degenerate_error():
    # emission scale so small that every state's density underflows
    m = iid_model(0.0, 1e-160)
    with np.errstate(over="ignore"), pytest.raises(DegenerateInputError):
        log_likelihood(m, np.array([50.0]))


# --- per-step ratios -------------------------------------------------------------


def test_ratios_zero_for_identical_models():
    path = sample_path(CASE1_GEN, 300, seed=2)
    r = per_step_log_ratios(CASE1_GEN, CASE1_GEN, path.y, path.y_prev)
    assert np.all(r == 0.0)


def test_ratio_partial_sums_match_likelihood_difference():
    path = sample_path(CASE1_GEN, 400, seed=21)
    r = per_step_log_ratios(CASE1_GEN, CASE1_ALT, path.y, path.y_prev)
    diff = log_likelihood(CASE1_GEN, path.y, path.y_prev) - log_likelihood(
        CASE1_ALT, path.y, path.y_prev
    )
    assert abs(r.sum() - diff) <= 1e-12


def test_ratios_iid_reduction():
    p, q = iid_model(0.5, 1.0), iid_model(-0.2, 1.5)
    rng = np.random.default_rng(3)
    y = rng.normal(0.5, 1.0, size=100)

    def logpdf(v, mu, sd):
        return -0.5 * ((v - mu) / sd) ** 2 - math.log(sd * math.sqrt(2 * math.pi))

    want = logpdf(y, 0.5, 1.0) - logpdf(y, -0.2, 1.5)
    got = per_step_log_ratios(p, q, y)
    np.testing.assert_allclose(got, want, atol=1e-10)


# --- path-sum oracle ----------------------------------------------------------


def test_brute_force_hand_expansion():
    m = CASE1_GEN
    chain = as_chain(m)
    y = np.array([0.9])
    want = math.log(
        sum(
            chain.pi[z] * float(chain.emission_pdf(0.9, 0.0)[z])
            for z in range(chain.d)
        )
    )
    assert abs(brute_force_log_likelihood(m, y) - want) <= 1e-12


def test_brute_force_single_state_chain():
    chain = LinearGaussianChain(
        pi=np.array([1.0]),
        transition=np.array([[1.0]]),
        c=np.array([0.3]),
        b=np.array([0.5]),
        s=np.array([1.1]),
    )
    y = np.array([0.2, -0.4, 1.0])
    want = 0.0
    prev = 0.0
    for v in y:
        z = (v - 0.3 - 0.5 * prev) / 1.1
        want += -0.5 * z * z - math.log(1.1 * math.sqrt(2 * math.pi))
        prev = v
    assert abs(brute_force_log_likelihood(chain, y) - want) <= 1e-12


def test_brute_force_rejects_huge_path_counts():
    y = np.zeros(12)
    with pytest.raises(ValueError):
        brute_force_log_likelihood(CASE1_GEN, y)  # 4^13 paths


# --- matrix-product route --------------------------------------------------------


def test_matrix_route_base_case():
    y1 = 1.2
    got = matrix_log_likelihood(CASE1_GEN, np.array([y1]))
    want = forward_init(CASE1_GEN, y1).log_likelihood
    assert abs(got - want) <= 1e-12


def test_matrix_route_medium_sequence():
    path = sample_path(CASE1_GEN, 50, seed=4)
    got = matrix_log_likelihood(CASE1_GEN, path.y, path.y_prev)
    want = log_likelihood(CASE1_GEN, path.y, path.y_prev)
    assert abs(got - want) <= 1e-9


def test_matrix_route_matches_oracle():
    rng = np.random.default_rng(5)
    m = random_model(rng, "A")
    y = rng.normal(size=6)
    assert abs(matrix_log_likelihood(m, y) - brute_force_log_likelihood(m, y)) <= 1e-9


def test_density_matrix_layout():
    m = ModelAParams(p00=0.7, p11=0.6, mu=(0.0, 1.0), psi=(0.0, 0.0),
                     sigma=(1.0, 2.0))
    chain = as_chain(m)
    dm = density_matrix(m, 0.5, 0.0).entries
    f = chain.emission_pdf(0.5, 0.0)
    np.testing.assert_allclose(dm, chain.transition.T * f[:, None], atol=1e-15)
    first = density_matrix(m, 0.5, 0.0, first=True).entries
    np.testing.assert_allclose(first, np.diag(f), atol=1e-15)


# --- batch filter ----------------------------------------------------------------


def test_batch_normalizers_match_scalar_filter():
    from hmmdiv.forward import _log_normalizers

    rng = np.random.default_rng(6)
    chain = as_chain(CASE1_GEN)
    y = rng.normal(1.5, 1.2, size=(5, 60))
    y_prev = rng.normal(size=5)
    batch = batch_log_normalizers(chain, y, y_prev)
    assert batch.shape == (5, 60)
    for r in range(5):
        scalar = _log_normalizers(chain, y[r], float(y_prev[r]))
        np.testing.assert_allclose(batch[r], scalar, rtol=1e-12, atol=1e-12)


def test_four_state_reduces_to_two_state_when_memoryless():
    # psi2 = 0 makes the emission depend on the current regime only, so the
    # lifted four-state filter must price data exactly like the two-state one
    m = ModelBParams(p01=0.3, p10=0.55, mu=(1.0, -0.5), phi=0.4, psi1=0.9,
                     psi2=0.0, sigma=1.1)
    two_state = LinearGaussianChain(
        pi=np.array([0.55, 0.3]) / 0.85,
        transition=np.array([[0.7, 0.3], [0.55, 0.45]]),
        c=0.9 * np.array([1.0, -0.5]),
        b=np.array([0.4, 0.4]),
        s=np.array([1.1, 1.1]),
    )
    path = sample_path(m, 300, seed=17)
    four = log_likelihood(m, path.y, path.y_prev)
    two = log_likelihood(two_state, path.y, path.y_prev)
    assert abs(four - two) <= 1e-10


# --- oracle equivalence (module-scale sample) -------------------------------------


def test_three_routes_agree_on_random_instances():
    rng = np.random.default_rng(123)
    for _ in range(40):
        family = "A" if rng.random() < 0.5 else "B"
        m = random_model(rng, family)
        n = int(rng.integers(1, 9 if family == "A" else 6))
        y = rng.normal(scale=1.5, size=n)
        y0 = float(rng.normal())
        bf = brute_force_log_likelihood(m, y, y0)
        assert abs(log_likelihood(m, y, y0) - bf) <= 1e-9
        assert abs(matrix_log_likelihood(m, y, y0) - bf) <= 1e-9
