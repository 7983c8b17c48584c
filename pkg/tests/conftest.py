"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from src.fieldnet import init_network
from src.geometry import get_surface, sample_isosurface
from src.models import EuclideanBox, ProblemSpec, TrainConfig
from src.problems.presets import euclidean_mixture, gaussian


@pytest.fixture
def small_spec() -> ProblemSpec:
    """A 6x6 planar UOT problem with three time nodes."""
    return ProblemSpec(
        name="small",
        domain=EuclideanBox(bounds=[(0.0, 1.0), (0.0, 1.0)], grid_shape=[6, 6]),
        rho0=euclidean_mixture(gaussian([0.4, 0.4], 0.02)),
        rho1=euclidean_mixture(gaussian([0.6, 0.6], 0.02, coefficient=2.0)),
        eta=2.0,
        lambda_c=1.0,
        lambda_hj=1.0,
        lambda_ic=10.0,
        n_time=3,
        mode="UOT",
    )


@pytest.fixture
def tiny_config() -> TrainConfig:
    """Narrow networks and a short run, logging every step."""
    return TrainConfig(hidden_layers=1, width=8, max_iters=5, log_interval=1, seed=3)


@pytest.fixture
def random_net():
    """Factory for seeded tanh networks."""

    def build(dims=(3, 8, 8, 1), head="linear", seed=0):
        return init_network(list(dims), "tanh", head, seed=seed)

    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def sphere_cloud():
    """The sphere sampled at its default resolution."""
    return sample_isosurface(get_surface("sphere"))
