import numpy as np
import pytest

from boxpinn import kernels, networks, sampling

kernels.tune_malloc()  # the suite trains real models; keep steps fast


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_samples():
    """A small collocation set shared by gradient-check tests."""
    return sampling.build_samples(40, 5, seed=7)


@pytest.fixture(scope="session")
def mlp_model():
    return networks.default_model(networks.MLP, seed=42)


@pytest.fixture(scope="session")
def kan_model():
    return networks.default_model(networks.KAN, seed=42)


def make_model(backend, params):
    """A model with the default architecture but explicit parameters."""
    base = networks.default_model(backend, seed=0)
    return networks.NetworkModel(backend, base.layer_widths, base.kan_hyper, np.asarray(params, dtype=np.float64))


def zero_model(backend):
    base = networks.default_model(backend, seed=0)
    return make_model(backend, np.zeros(base.param_count))
