"""Shared fixtures. The refinement studies are expensive (the n=32 level
marches 1024 steps), so they are session-scoped and reused by the analysis
and acceptance tests."""

import numpy as np
import pytest

from porofem import (Problem, SolverConfig, convergence_study, make_case,
                     temporal_study, time_march)

SPATIAL_LEVELS = [4, 8, 16, 32]
TEST1_DTS = [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160]
TEST2_DTS = [1 / 40, 1 / 80, 1 / 160, 1 / 320, 1 / 640]


@pytest.fixture(scope="session")
def test1_spatial_report():
    return convergence_study("test1", SPATIAL_LEVELS, theta=1, dt_rule="h2")


@pytest.fixture(scope="session")
def test2_spatial_report():
    return convergence_study("test2", SPATIAL_LEVELS, theta=1, dt_rule="h2")


# The temporal signals at h=1/4 are tiny (the three-field split damps the
# backward-Euler error), so the inner iteration is polished far below the
# signal amplitude to keep the dt-differences clean.
TEMPORAL_OPTS = dict(picard_tol=1e-13, solver_opts={"picard_max": 200})


@pytest.fixture(scope="session")
def test1_temporal_report():
    return temporal_study("test1", 4, TEST1_DTS, theta=1, **TEMPORAL_OPTS)


@pytest.fixture(scope="session")
def test2_temporal_report():
    return temporal_study("test2", 4, TEST2_DTS, theta=1, **TEMPORAL_OPTS)


@pytest.fixture(scope="session")
def test1_n8_result():
    """One moderate march reused by export/analysis checks."""
    case = make_case("test1")
    problem = Problem.from_case(case, 8)
    config = SolverConfig(dt=1 / 64, t_end=1.0, theta=1)
    return case, problem, time_march(config, problem)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
