import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nlsgrowth.initial import InitSpec, make_initial
from nlsgrowth.spectral import GridSpec

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=100, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def grid2():
    return GridSpec.cube(2, 32)


@pytest.fixture
def grid3():
    return GridSpec.cube(3, 16)


@pytest.fixture
def smooth2(grid2):
    """Band-limited random field, well inside the 2/3 band."""
    return make_initial(InitSpec("random_sobolev", amplitude=1.0, s=2, seed=7, kmax=4), grid2)


def random_field(grid, seed=0, amplitude=1.0, s=2.0, kmax=None):
    return make_initial(InitSpec("random_sobolev", amplitude=amplitude, s=s, seed=seed, kmax=kmax), grid)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
