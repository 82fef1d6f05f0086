import numpy as np
import pytest

from ode_discovery.config import RunConfig
from ode_discovery.datagen import SPRING_CASES, spring_mass_series
from ode_discovery.evolve import GAConfig


@pytest.fixture(scope="session")
def ci_config():
    return RunConfig(ga=GAConfig.ci(seed=0))


@pytest.fixture(scope="session")
def spring_cells(ci_config):
    """All six spring-mass cells under the CI profile, base seed 0."""
    from ode_discovery.pipeline import benchmark_spring

    return benchmark_spring(ci_config)


@pytest.fixture(scope="session")
def edc_results():
    from ode_discovery.pipeline import benchmark_edc

    return benchmark_edc(RunConfig.kinetics(ga=GAConfig.ci(seed=0)))


@pytest.fixture
def underdamped():
    return spring_mass_series(SPRING_CASES["underdamped"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
