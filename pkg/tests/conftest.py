import numpy as np
import pytest

from dtoda import backend, cylinder, general_family, homogeneous
from dtoda.conformal import ExteriorMap


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the JIT kernels once so individual tests stay fast
    backend.warmup()


@pytest.fixture(scope="session")
def sigma1():
    return homogeneous(1.0, 1.0, 0.0, 100.0)


@pytest.fixture(scope="session")
def cyl():
    return cylinder(2.0, 0.04, 50.0)


@pytest.fixture(scope="session")
def gen4():
    return general_family(1.0, 0.5, 4.0, 0.65, 16.0)


@pytest.fixture()
def pert_map():
    return ExteriorMap(1.0, np.array([0.0, 0.12 + 0.04j, 0.02], complex))


@pytest.fixture()
def ellipse_map():
    return ExteriorMap(1.0, np.array([0.0, 0.3], complex))


@pytest.fixture()
def tilted_map():
    return ExteriorMap(1.1, np.array([0.05j, 0.1, -0.03 + 0.02j], complex))
