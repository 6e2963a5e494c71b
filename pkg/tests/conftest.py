import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robsemi.model import (discrete_model, exponential_scale_model, normal_location_model,
                           product_normal_model)

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def normal():
    return normal_location_model()


@pytest.fixture(scope="session")
def expo():
    return exponential_scale_model()


@pytest.fixture(scope="session")
def normal2():
    return product_normal_model(2)


@pytest.fixture(scope="session")
def five_atom():
    return discrete_model([(x, p, x) for x, p in zip([-2, -1, 0, 1, 2], [0.1, 0.2, 0.4, 0.2, 0.1])])


def centered_discrete(points, weights, raw_scores):
    """Discrete model with scores centered under the normalized weights."""
    p = np.asarray(weights, dtype=float)
    p = p / p.sum()
    s = np.asarray(raw_scores, dtype=float)
    s = s - p @ s
    return discrete_model(list(zip(points, p, s)))


@pytest.fixture(scope="session")
def skewed_atoms():
    """Three asymmetric discrete models with 5, 7 and 9 atoms."""
    rng = np.random.default_rng(20240601)
    out = []
    for m in (5, 7, 9):
        w = rng.uniform(0.2, 1.0, m)
        raw = np.sort(rng.gamma(2.0, 1.0, m))
        out.append(centered_discrete(np.arange(m, dtype=float), w, raw))
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
