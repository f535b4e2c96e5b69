import numpy as np
import pytest

from threshold_regret.chernoff import simulate_chernoff


@pytest.fixture(scope="session")
def small_chernoff():
    """Cheapest legal table: used by module tests that need Z quantiles."""
    return simulate_chernoff(n_paths=10_000, domain_halfwidth=2.0, grid_step=1e-3, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1729)
