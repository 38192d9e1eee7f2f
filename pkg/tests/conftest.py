"""Shared fixtures: benchmark-case results computed once per session.

The heavy work (72 deterministic solves, 8 x 100 simulated replications)
is cached at session scope so the module tests and the acceptance suite
draw on the same numbers.
"""

import pytest
from hypothesis import HealthCheck, settings

from hmmdiv import McConfig, divergence_fredholm, replication_log_ratios
from hmmdiv.cases import ALPHA_GRID, CASES
from hmmdiv.montecarlo import estimate_from_log_ratios

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def fredholm_results():
    """{(case_id, alpha): DivergenceResult} for the full benchmark grid at
    default grid settings."""
    out = {}
    for cid, (t1, t) in CASES.items():
        for a in ALPHA_GRID:
            out[(cid, a)] = divergence_fredholm(t1, t, a)
    return out


@pytest.fixture(scope="session")
def mc_log_ratios():
    """{case_id: (reps, n) per-step log ratio matrix} at the default
    simulation settings (n=2000, reps=100, seed=0)."""
    cfg = McConfig()
    return {cid: replication_log_ratios(t1, t, cfg) for cid, (t1, t) in CASES.items()}


@pytest.fixture(scope="session")
def mc_estimates(mc_log_ratios):
    """{(case_id, alpha): DivergenceEstimate} on the shared replications,
    so every alpha sees identical paths."""
    out = {}
    for cid, rho in mc_log_ratios.items():
        for a in ALPHA_GRID:
            out[(cid, a)] = estimate_from_log_ratios(rho, 1.0 if a == "kl" else a)
    return out
