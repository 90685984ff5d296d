"""Test local training, FedAvg and the federation loop."""
import logging

import numpy as np
import pytest
from pydantic import ValidationError

from flmrsim.core.federation import (
    ClientUpdate,
    evaluate,
    fedavg,
    local_train,
    new_client,
    run_federation,
    train_centralized,
)
from flmrsim.core.nn import ModelParams, init_params
from flmrsim.core.task_manager import ClientTaskManager
from flmrsim.core.real_logic import query_satisfaction
from flmrsim.data.workload import build_client_dataset, generate_synthetic
from flmrsim.errors import AggregationError, ConfigurationError, UsageError
from flmrsim.models.config import FLConfig, LossKind, MLPConfig
from flmrsim.models.records import ClientDataset, FeatureStats, VbsRecord

from conftest import scalar_params


def _same(a: ModelParams, b: ModelParams) -> bool:
    return all(
        np.array_equal(wa, wb) and np.array_equal(ba, bb)
        for (wa, ba), (wb, bb) in zip(a.layers, b.layers)
    )


def test_fedavg_single_update_is_identity(small_params):
    """Test that one client's parameters come back unchanged."""
    assert _same(fedavg([ClientUpdate(small_params, 17, 4)]), small_params)


def test_fedavg_weighted_example():
    """Test D = [1, 3] with values [0, 4] averaging to 3.0."""
    merged = fedavg([(scalar_params(0.0), 1), (scalar_params(4.0), 3)])
    assert merged.layers[0][0][0, 0] == 3.0


def test_fedavg_equal_points_fixed(small_params):
    """Test that identical parameter sets average to themselves for any sizes."""
    updates = [ClientUpdate(small_params, size, cid) for cid, size in enumerate((5, 900, 31))]
    assert _same(fedavg(updates), small_params)


def test_fedavg_order_independent_of_input_order():
    """Test that aggregation sorts by client id."""
    a = ClientUpdate(scalar_params(0.1), 3, 0)
    b = ClientUpdate(scalar_params(0.7), 5, 1)
    c = ClientUpdate(scalar_params(0.3), 2, 2)
    assert _same(fedavg([c, a, b]), fedavg([a, b, c]))


def test_fedavg_errors(small_params):
    """Test empty input, zero sizes and mismatched shapes."""
    with pytest.raises(UsageError):
        fedavg([])
    with pytest.raises(AggregationError):
        fedavg([ClientUpdate(small_params, 0, 0)])
    with pytest.raises(AggregationError) as excinfo:
        fedavg([ClientUpdate(small_params, 3, 0), ClientUpdate(scalar_params(1.0), 3, 6)])
    assert excinfo.value.client_id == 6


def _constant_dataset() -> ClientDataset:
    """All-zero feature rows labelled 0.5, what any zero-bias network predicts for them."""
    features = np.zeros((6, 5))
    targets = np.full(6, 0.5)
    record = VbsRecord(mcs_dl=1, mcs_ul=1, dl_kbps=1.0, ul_kbps=1.0, cpu_set=0, cpu=0.5)
    return ClientDataset(
        client_id=0,
        records=(record,) * 6,
        feature_stats=FeatureStats(mins=(0.0,) * 5, maxs=(1.0,) * 5),
        train_x=features,
        train_y=targets,
        test_records=(record,),
        test_x=features[:1],
        test_y=targets[:1],
    )


def test_exact_predictions_leave_params_unchanged(small_params):
    """Test that zero-error data produces zero updates."""
    cfg = FLConfig(K=1, T=1, L=3, batch_size=4, mlp=MLPConfig(hidden_dims=(8, 4)))
    client = new_client(_constant_dataset(), small_params, cfg)
    trained, metrics = local_train(client, small_params, cfg)
    assert _same(trained.params, small_params)
    assert metrics.train_phi == 1.0


def test_local_train_is_deterministic(datasets, fl_config, small_params):
    """Test that identical inputs give bit-identical local weights."""
    client = new_client(datasets[0], small_params, fl_config)
    first, _ = local_train(client, small_params, fl_config, round_index=2)
    second, _ = local_train(client, small_params, fl_config, round_index=2)
    assert _same(first.params, second.params)


def test_more_local_epochs_do_not_increase_loss(small_params, generator_config):
    """Test full-batch descent: L = 5 ends no worse than L = 1."""
    dataset = build_client_dataset(0, generate_synthetic(generator_config), 0.2, seed=1)
    losses = {}
    for epochs in (1, 5):
        cfg = FLConfig(K=1, T=1, L=epochs, batch_size=10_000, mlp=MLPConfig(hidden_dims=(8, 4)))
        _, metrics = local_train(new_client(dataset, small_params, cfg), small_params, cfg)
        losses[epochs] = metrics.train_loss
    assert losses[5] <= losses[1]


def test_local_train_rejects_foreign_weights(datasets, fl_config, small_params):
    """Test that a global model of another shape is a configuration error."""
    client = new_client(datasets[0], small_params, fl_config)
    other = init_params(MLPConfig(hidden_dims=(3, 3)), seed=0)
    with pytest.raises(ConfigurationError):
        local_train(client, other, fl_config)


def test_evaluate_reports_phi_for_both_objectives(datasets, fl_config, small_params):
    """Test that DeepCog evaluation still reports the satisfaction level."""
    data = datasets[0]
    flmr = evaluate(small_params, data.test_x, data.test_y, fl_config)
    baseline_cfg = fl_config.model_copy(update={"loss_kind": LossKind.DEEPCOG})
    baseline = evaluate(small_params, data.test_x, data.test_y, baseline_cfg)
    assert flmr.loss == 1.0 - flmr.phi
    assert baseline.phi == flmr.phi
    assert baseline.loss != flmr.loss
    assert baseline.predictions.shape == data.test_y.shape
    query = query_satisfaction(small_params, data.test_x, data.test_y, fl_config.fuzzy)
    assert flmr.phi == query.phi
    np.testing.assert_array_equal(flmr.predictions, query.predictions)


def test_run_federation_shape_of_results(tiny_run, fl_config):
    """Test T round results with K per-client entries and pooled test data."""
    assert [r.round for r in tiny_run] == list(range(fl_config.T))
    for result in tiny_run:
        assert [m.client_id for m in result.per_client] == [0, 1, 2]
        assert result.test_predictions.shape == result.test_targets.shape
        assert result.global_params.is_finite()
        for metrics in result.per_client:
            assert metrics.test_loss == 1.0 - metrics.test_phi
            assert 0.0 <= metrics.train_phi <= 1.0


def test_single_client_matches_centralized(generator_config):
    """Test that K = 1 reproduces centralized training bit for bit over 10 rounds."""
    cfg = FLConfig(K=1, T=10, L=2, batch_size=32, seed=21, mlp=MLPConfig(hidden_dims=(8, 4)))
    dataset = build_client_dataset(0, generate_synthetic(generator_config), 0.2, cfg.seed)
    federated = run_federation(cfg, [dataset])
    centralized = train_centralized(cfg, dataset)
    assert len(centralized) == len(federated) == 10
    for result, params in zip(federated, centralized):
        assert _same(result.global_params, params)


def test_worker_count_does_not_change_results(fl_config, datasets):
    """Test bit-identical rounds with one and four workers."""
    serial = run_federation(fl_config, datasets, workers=1)
    parallel = run_federation(fl_config, datasets, workers=4)
    for a, b in zip(serial, parallel):
        assert _same(a.global_params, b.global_params)
        assert a.per_client == b.per_client
        assert np.array_equal(a.test_predictions, b.test_predictions)


def test_round_logs_client_timing(fl_config, datasets, caplog, monkeypatch):
    """Test that every round logs each client's progress and elapsed time at DEBUG."""
    monkeypatch.setattr(logging.getLogger("flmrsim"), "propagate", True)
    caplog.set_level(logging.DEBUG, logger="flmrsim.core.federation")
    with ClientTaskManager(workers=2) as manager:
        run_federation(fl_config, datasets, manager=manager)
        for cid in (0, 1, 2):
            assert manager.get_progress(cid) == 100.0
            assert manager.get_elapsed_time(cid) is not None
    timing = [
        r.getMessage()
        for r in caplog.records
        if r.name == "flmrsim.core.federation" and r.levelno == logging.DEBUG
    ]
    assert len(timing) == fl_config.T * 3
    assert all("100%" in message for message in timing)

def test_partial_participation(datasets, small_mlp):
    """Test that a seeded subset trains while every client is still evaluated."""
    cfg = FLConfig(K=3, T=3, batch_size=64, participation=0.5, seed=2, mlp=small_mlp)
    first = run_federation(cfg, datasets)
    second = run_federation(cfg, datasets)
    assert all(len(r.per_client) == 3 for r in first)
    assert all(_same(a.global_params, b.global_params) for a, b in zip(first, second))


def test_deepcog_federation_runs(datasets, fl_config):
    """Test that the baseline objective trains to finite parameters."""
    cfg = fl_config.model_copy(update={"loss_kind": LossKind.DEEPCOG, "T": 2})
    results = run_federation(cfg, datasets)
    assert len(results) == 2
    assert results[-1].global_params.is_finite()
    assert all(m.test_loss >= 0.0 for m in results[-1].per_client)


def test_zero_rounds_rejected():
    """Test that T = 0 fails validation."""
    with pytest.raises(ValidationError):
        FLConfig(T=0)


def test_client_count_must_match(datasets, small_mlp):
    """Test that K must equal the number of client datasets."""
    with pytest.raises(ConfigurationError):
        run_federation(FLConfig(K=5, T=1, mlp=small_mlp), datasets)


def test_feature_width_must_match(datasets):
    """Test that the model input width must match the data."""
    cfg = FLConfig(K=3, T=1, mlp=MLPConfig(input_dim=4, hidden_dims=(4, 4)))
    with pytest.raises(ConfigurationError):
        run_federation(cfg, datasets)

