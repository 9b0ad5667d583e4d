import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from axcirc import FitConfig, builtin_scenario, fit
from axcirc.simstudy import make_covariates, simulate_dataset

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_data():
    """One small draw from the standard two-component scenario."""
    sc = builtin_scenario("vm-vm-j2", n=250)
    rng = np.random.default_rng(7)
    z = make_covariates(sc.covariates, sc.n, rng)
    data, labels = simulate_dataset(sc.truth, z, rng)
    return sc, data, labels


@pytest.fixture(scope="session")
def small_fit(small_data):
    """A converged fit of the small dataset, shared across tests."""
    sc, data, _ = small_data
    result = fit(data, sc.families, 2, FitConfig(restarts=6, seed=11))
    assert result.converged
    return sc, data, result
