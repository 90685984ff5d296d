"""Shared fixtures: small networks, synthetic clients and a finished tiny federation."""
import numpy as np
import pytest

from flmrsim.core.federation import run_federation
from flmrsim.core.nn import ModelParams, init_params
from flmrsim.data.workload import build_client_dataset, generate_clients
from flmrsim.models.config import FLConfig, GeneratorConfig, MLPConfig


def scalar_params(value: float) -> ModelParams:
    """A 1-input, 1-output parameter set holding one weight."""
    return ModelParams.from_arrays([(np.array([[value]]), np.array([0.0]))])


@pytest.fixture
def small_mlp():
    return MLPConfig(hidden_dims=(8, 4))


@pytest.fixture
def small_params(small_mlp):
    return init_params(small_mlp, seed=3)


@pytest.fixture
def generator_config():
    return GeneratorConfig(seed=11, n_records=200)


@pytest.fixture
def client_records(generator_config):
    return generate_clients(generator_config, 3)


@pytest.fixture
def fl_config(small_mlp):
    return FLConfig(K=3, T=4, L=1, batch_size=64, seed=5, mlp=small_mlp)


@pytest.fixture
def datasets(client_records, fl_config):
    return [
        build_client_dataset(cid, rows, fl_config.test_fraction, fl_config.seed)
        for cid, rows in sorted(client_records.items())
    ]


@pytest.fixture
def tiny_run(fl_config, datasets):
    """Round results of a 3-client, 4-round FLMR federation."""
    return run_federation(fl_config, datasets)
