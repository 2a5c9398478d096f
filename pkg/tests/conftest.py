import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hevlab.typedist import TypeDistribution

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def f0():
    """The two-point benchmark mixing law 0.8*delta_0.5 + 0.2*delta_3.

    Built from literal weights (0.8, 0.2) so the misallocation indices
    evaluate to exact binary floats; two_point(0.5, 3.0, 0.8) carries
    1 - 0.8 = 0.19999... instead.
    """
    return TypeDistribution.from_atoms([0.5, 3.0], [0.8, 0.2])


@pytest.fixture(scope="session")
def f3():
    """Three-atom mean-one design baseline."""
    return TypeDistribution.from_atoms([0.5, 1.0, 2.0], [0.4, 0.4, 0.2])


@pytest.fixture(scope="session")
def dirac1():
    return TypeDistribution.dirac(1.0)


def random_atomic(rng: np.random.Generator, max_atoms: int = 4) -> TypeDistribution:
    """A random atomic law with 1..max_atoms atoms, not normalized."""
    n = int(rng.integers(1, max_atoms + 1))
    locs = np.sort(np.exp(rng.uniform(np.log(0.1), np.log(10.0), n)))
    locs += 1e-3 * np.arange(n)  # keep atoms distinct after sorting
    w = rng.dirichlet(np.ones(n))
    return TypeDistribution.from_atoms(locs, w)
