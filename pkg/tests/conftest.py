import numpy as np
import pytest

from _systems import coupled_system
from shapemap.config import load_config
from shapemap.geometry import make_direction


@pytest.fixture(scope="session")
def lemniscate():
    return load_config("lemniscate.cfg")


@pytest.fixture(scope="session")
def exp2():
    return load_config("exp2.cfg")


@pytest.fixture(scope="session")
def coupled():
    sys, Z = coupled_system()
    lay = sys.layout
    dirs = {
        "x": make_direction(lay, "x", ["1", "cos(x)+w^2"]),
        "w": make_direction(lay, "w", ["x*sin(w)", "1"]),
    }
    return sys, Z, dirs


@pytest.fixture(scope="session")
def lem_parts(lemniscate):
    cfg = lemniscate
    return cfg.system, cfg.congruence, cfg.direction("t").direction, cfg.direction("theta").direction


@pytest.fixture()
def rng():
    return np.random.default_rng(20240611)
