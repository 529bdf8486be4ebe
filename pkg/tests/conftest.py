import numpy as np
import pytest

from capnav.dynamics import CapsuleSpec
from capnav.flowfield import FluidProperties
from capnav.geometry import build_tube, build_y_junction
from capnav.magnetics import default_capsule_curve


@pytest.fixture(scope="session")
def junction():
    return build_y_junction()


@pytest.fixture(scope="session")
def tube():
    return build_tube(0.005, 0.1)


@pytest.fixture(scope="session")
def water():
    return FluidProperties.water()


@pytest.fixture(scope="session")
def capsule():
    return CapsuleSpec()


@pytest.fixture(scope="session")
def curve():
    return default_capsule_curve()


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(20260814))
