import numpy as np
import pytest

from papuf import DelayParams, Design, Netlist, synthesize_device


@pytest.fixture(scope="session")
def base_params():
    return DelayParams()  # mean 100, sigma_process 5, noiseless


@pytest.fixture(scope="session")
def pa64(base_params):
    return synthesize_device(base_params, Netlist(Design.PA_PUF, 64), 42)


@pytest.fixture(scope="session")
def apuf64(base_params):
    return synthesize_device(base_params, Netlist(Design.APUF, 64), 11)


def random_bits(shape, seed):
    return np.random.default_rng(seed).integers(0, 2, size=shape, dtype=np.uint8)
