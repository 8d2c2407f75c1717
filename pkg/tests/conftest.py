import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from homwalk.io import load_measure, load_spec

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def sl2_dense():
    return load_measure("bundled:sl2_dense")


@pytest.fixture(scope="session")
def sl2_hyperbolic():
    return load_measure("bundled:sl2_hyperbolic")


@pytest.fixture(scope="session")
def sl3_symmetric():
    return load_measure("bundled:sl3_symmetric")


@pytest.fixture(scope="session")
def sl4_generic():
    return load_measure("bundled:sl4_generic")


@pytest.fixture(scope="session")
def specs():
    names = ["sl2_full", "sl3_recurrent", "sl3_drift", "sl3_proper_n", "sl4_trivial"]
    return {n: load_spec(f"bundled:{n}") for n in names}

