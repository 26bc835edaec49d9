"""Shared fixtures: session-scoped hosts so the slow sampling runs once."""

import pytest

from hampack.model import ModelParams, sample_erased_digraph, sample_simple_digraph
from hampack.rng import rng_stream


@pytest.fixture(scope="session")
def tiny_params():
    # c=3 keeps the strict-rejection acceptance near e^-6: feasible in seconds
    return ModelParams.make(300, 3.0, 1)


@pytest.fixture(scope="session")
def tiny_host(tiny_params):
    sd, _ = sample_simple_digraph(tiny_params, rng_stream(424242, 0))
    return sd


@pytest.fixture(scope="session")
def host_5k():
    """n=5000, c=50, k=1 erased host: the main packing scale."""
    params = ModelParams.make(5000, 50.0, 1)
    sd, _ = sample_erased_digraph(params, rng_stream(171717, 0))
    return params, sd


@pytest.fixture(scope="session")
def host_k2():
    """n=2000, c=100, k=2 erased host."""
    params = ModelParams.make(2000, 100.0, 2)
    sd, _ = sample_erased_digraph(params, rng_stream(171717, 1))
    return params, sd
