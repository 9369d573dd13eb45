import numpy as np
import pytest

from tarbayes import NoiseModel, TarModel

REFERENCE = {
    "model": {"h": "0.5*x", "g": "-0.5*x", "theta_box": [0.1, 0.9]},
    "noise": {"family": "gaussian", "sigma": 1.0},
    "theta_true": [0.5],
}


@pytest.fixture
def reference_model():
    return TarModel.two_regime("0.5*x", "-0.5*x", (0.1, 0.9), NoiseModel("gaussian", 1.0))


@pytest.fixture
def gaussian():
    return NoiseModel("gaussian", 1.0)


@pytest.fixture
def laplace():
    return NoiseModel("laplace", 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
