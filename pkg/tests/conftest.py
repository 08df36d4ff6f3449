import numpy as np
import pytest

from stefan_etc import config as config_mod
from stefan_etc.controller import ControllerGains
from stefan_etc.harness import simulate

PAPER_GAINS = dict(c1=3.2e-3, c2=5.0e-3, delta1=10.0, delta2=0.3)

NONDIM_BASE = {
    "material_preset": "nondim",
    "s0": 0.25,
    "s_r": 0.5,
    "c1": 1.0,
    "c2": 1.6,
    "delta1": 10.0,
    "delta2": 0.3,
    "N": 64,
    "t_final": 2.0,
}

ZINC_BASE = {
    "material_preset": "zinc",
    "s0": 0.05,
    "s_r": 0.30,
    "c1": 3.2e-3,
    "c2": 5.0e-3,
    "delta1": 10.0,
    "delta2": 0.3,
    "N": 200,
}


def nondim_config(**overrides):
    return config_mod.from_mapping({**NONDIM_BASE, **overrides})


def zinc_config(**overrides):
    return config_mod.from_mapping({**ZINC_BASE, **overrides})


@pytest.fixture(scope="session")
def paper_gains():
    return ControllerGains(**PAPER_GAINS)


@pytest.fixture(scope="session")
def nondim_run():
    """Short unit-free closed-loop run shared by the cheap checks."""
    cfg = nondim_config()
    trace, summary = simulate(cfg)
    return cfg, trace, summary


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
