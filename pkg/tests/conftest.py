import warnings

import numpy as np
import pytest

from scldmd import benchmark
from scldmd.data import Dataset, SampledTrajectory


def constant_trajectory(x0, c, T=1.0, samples=21):
    t = np.linspace(0.0, T, samples)
    return SampledTrajectory(t, np.tile(x0, (samples, 1)), np.tile(np.atleast_1d(c), (samples, 1)))


@pytest.fixture(scope="session")
def duffing_cfg():
    return benchmark.ExperimentConfig()


@pytest.fixture(scope="session")
def duffing_run(duffing_cfg):
    """The full reference Duffing experiment, computed once per session."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return benchmark.run_experiment(duffing_cfg)


@pytest.fixture(scope="session")
def small_cfg():
    return benchmark.ExperimentConfig(grid_counts=(3, 3), grid_low=(-1, -1), grid_high=(1, 1))


@pytest.fixture(scope="session")
def small_dataset(small_cfg) -> Dataset:
    return benchmark.generate_dataset(small_cfg)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
