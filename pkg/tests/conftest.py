import numpy as np
import pytest

from mdpde.simulate import ContaminationSpec, DriftAffine, contaminate, simulate_path, step_size

B_TRUE = np.array([[-0.6, -0.2], [0.1, -0.4]])
b_TRUE = np.array([2.0, 1.0])
SIGMA_TRUE = np.array([[1.0, 0.5], [0.5, 0.7]])


def make_path(n=500, seed=0, eps=0.0, kappa=5.0, x0=(0.0, 0.0)):
    """Simulated path from the bivariate reference model, optionally contaminated."""
    seeds = np.random.SeedSequence(seed).spawn(2)
    path = simulate_path(DriftAffine(B_TRUE, b_TRUE), SIGMA_TRUE, np.asarray(x0), n,
                         step_size(n), seed=seeds[0])
    return contaminate(path, ContaminationSpec(eps, kappa, seeds[1]))


def random_spd(rng, d, jitter=0.5):
    a = rng.standard_normal((d, d))
    return a @ a.T / d + jitter * np.eye(d)


@pytest.fixture
def clean_path():
    return make_path(500, seed=123)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
