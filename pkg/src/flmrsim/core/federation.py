"""Federated training: local AdaDelta epochs, sample-weighted averaging, T rounds."""
import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from functools import partial
from typing import NamedTuple

import numpy as np

from flmrsim.core import deepcog
from flmrsim.core.nn import ModelParams, backward, forward, global_norm, init_params
from flmrsim.core.optim import AdaDeltaState, adadelta_step, init_adadelta
from flmrsim.core.real_logic import loss_and_grad, query_satisfaction
from flmrsim.core.rng import SeedStreams, Stream
from flmrsim.core.task_manager import ClientTaskManager
from flmrsim.errors import AggregationError, ConfigurationError, UsageError
from flmrsim.models.config import FLConfig, LossKind
from flmrsim.models.records import ClientDataset
from flmrsim.models.reports import ClientRoundMetrics, RoundResult

logger = logging.getLogger(__name__)

ProgressFn = Callable[[float], None]


@dataclass(frozen=True)
class ClientState:
    """Everything one vBS owns between rounds.

    Shuffling draws come from a generator derived from (seed, client_id, round),
    never from state carried across rounds.
    """

    client_id: int
    dataset: ClientDataset = field(repr=False)
    params: ModelParams = field(repr=False)
    opt_state: AdaDeltaState = field(repr=False)
    streams: SeedStreams = field(repr=False)


@dataclass(frozen=True)
class LocalMetrics:
    """Training-set loss and satisfaction after local training."""

    client_id: int
    train_loss: float
    train_phi: float


class ClientUpdate(NamedTuple):
    """A client's trained weights and the sample count they were trained on."""

    params: ModelParams
    size: int
    client_id: int = 0


@dataclass(frozen=True)
class Evaluation:
    """Loss, satisfaction and raw predictions of a model on one data split."""

    loss: float
    phi: float
    predictions: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)


def _batch_objective(
    predictions: np.ndarray, targets: np.ndarray, cfg: FLConfig
) -> np.ndarray:
    if cfg.loss_kind is LossKind.FLMR:
        _, grad = loss_and_grad(predictions, targets, cfg.fuzzy)
        return grad
    _, grad = deepcog.batch_loss_and_grad(predictions[:, 0], targets, cfg.deepcog)
    return grad.reshape(-1, 1)


def _run_epochs(
    params: ModelParams,
    opt_state: AdaDeltaState,
    dataset: ClientDataset,
    cfg: FLConfig,
    rng: np.random.Generator,
    progress: ProgressFn | None = None,
) -> tuple[ModelParams, AdaDeltaState]:
    features, targets = dataset.train_x, dataset.train_y
    n = dataset.size
    with np.errstate(over="raise", invalid="raise"):
        for epoch in range(cfg.L):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                batch = order[start : start + cfg.batch_size]
                predictions, trace = forward(params, features[batch])
                dloss = _batch_objective(predictions, targets[batch], cfg)
                grads = backward(params, trace, dloss)
                params, opt_state = adadelta_step(params, grads, opt_state)
            if progress is not None:
                progress((epoch + 1) / cfg.L)
    return params, opt_state


def evaluate(
    params: ModelParams, features: np.ndarray, targets: np.ndarray, cfg: FLConfig
) -> Evaluation:
    """Objective value and satisfaction of fixed parameters on labelled data.

    The satisfaction level is reported for either objective; for FLMR the
    loss is exactly ``1 - phi``.
    """
    report = query_satisfaction(params, features, targets, cfg.fuzzy)
    predictions = report.predictions
    if cfg.loss_kind is LossKind.FLMR:
        loss = report.loss
    else:
        loss, _ = deepcog.batch_loss_and_grad(predictions, targets, cfg.deepcog)
    return Evaluation(loss=loss, phi=report.phi, predictions=predictions, targets=targets)


def new_client(dataset: ClientDataset, params: ModelParams, cfg: FLConfig) -> ClientState:
    """Client holding ``params`` with fresh optimizer accumulators."""
    return ClientState(
        client_id=dataset.client_id,
        dataset=dataset,
        params=params,
        opt_state=init_adadelta(params, cfg.optimizer),
        streams=SeedStreams(cfg.seed),
    )


def local_train(
    client: ClientState,
    global_params: ModelParams,
    cfg: FLConfig,
    round_index: int = 0,
    progress: ProgressFn | None = None,
) -> tuple[ClientState, LocalMetrics]:
    """Adopt the global weights, train L local epochs and report training metrics."""
    if global_params.shapes != client.params.shapes:
        raise ConfigurationError(
            f"client {client.client_id}: global parameters {global_params.shapes} "
            f"do not match local {client.params.shapes}"
        )
    rng = client.streams.generator(Stream.SHUFFLE, client.client_id, round_index)
    params, opt_state = _run_epochs(
        global_params, client.opt_state, client.dataset, cfg, rng, progress
    )
    result = evaluate(params, client.dataset.train_x, client.dataset.train_y, cfg)
    metrics = LocalMetrics(client.client_id, result.loss, result.phi)
    return replace(client, params=params, opt_state=opt_state), metrics


def fedavg(updates: Sequence[ClientUpdate | tuple[ModelParams, int]]) -> ModelParams:
    """Sample-count-weighted average of client parameters, summed in client-id order.

    Computed as ``W_ref + sum_k (D_k / D) (W_k - W_ref)`` with ``W_ref`` the
    first update, which equals the plain weighted sum and returns identical
    inputs bit for bit.
    """
    if not updates:
        raise UsageError("fedavg needs at least one client update")
    normalized = [
        u if isinstance(u, ClientUpdate) else ClientUpdate(u[0], u[1], index)
        for index, u in enumerate(updates)
    ]
    ordered = sorted(normalized, key=lambda u: u.client_id)
    reference = ordered[0].params
    for update in ordered:
        if update.size < 1:
            raise AggregationError(update.client_id, f"sample count {update.size} < 1")
        if update.params.shapes != reference.shapes:
            raise AggregationError(
                update.client_id, f"shapes {update.params.shapes} != {reference.shapes}"
            )

    total = sum(u.size for u in ordered)
    layers = []
    for index, (ref_w, ref_b) in enumerate(reference.layers):
        weight = ref_w.copy()
        bias = ref_b.copy()
        for update in ordered:
            coef = update.size / total
            upd_w, upd_b = update.params.layers[index]
            weight += coef * (upd_w - ref_w)
            bias += coef * (upd_b - ref_b)
        layers.append((weight, bias))
    return ModelParams.from_arrays(layers)


def _participants(
    cfg: FLConfig, client_ids: list[int], streams: SeedStreams, t: int
) -> list[int]:
    if cfg.participation >= 1.0:
        return client_ids
    count = max(1, math.ceil(cfg.participation * len(client_ids)))
    chosen = streams.generator(Stream.PARTICIPATION, t).choice(client_ids, count, replace=False)
    return sorted(int(c) for c in chosen)


def run_federation(
    cfg: FLConfig,
    datasets: Sequence[ClientDataset],
    workers: int = 1,
    manager: ClientTaskManager | None = None,
) -> list[RoundResult]:
    """Train T rounds of local training plus aggregation; one RoundResult per round."""
    if len(datasets) != cfg.K:
        raise ConfigurationError(f"K = {cfg.K} but {len(datasets)} client datasets supplied")
    ids = [d.client_id for d in datasets]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("client ids must be unique")
    for dataset in datasets:
        if dataset.train_x.shape[1] != cfg.mlp.input_dim:
            raise ConfigurationError(
                f"client {dataset.client_id} has {dataset.train_x.shape[1]} features, "
                f"model expects {cfg.mlp.input_dim}"
            )

    streams = SeedStreams(cfg.seed)
    global_params = init_params(cfg.mlp, cfg.seed)
    clients = {d.client_id: new_client(d, global_params, cfg) for d in datasets}
    client_ids = sorted(clients)
    logger.info(
        "Federation: K=%d T=%d L=%d batch=%d loss=%s workers=%d",
        cfg.K, cfg.T, cfg.L, cfg.batch_size, cfg.loss_kind.value, workers,
    )

    owns_manager = manager is None
    manager = manager or ClientTaskManager(workers)
    results: list[RoundResult] = []
    try:
        for t in range(cfg.T):
            started = time.perf_counter()
            active = _participants(cfg, client_ids, streams, t)
            broadcast = global_params
            jobs = {
                cid: partial(
                    local_train, clients[cid], broadcast, cfg, t, manager.progress_callback(cid)
                )
                for cid in active
            }
            trained = manager.run_round(t, jobs)
            for cid in active:
                logger.debug(
                    "Round %d client %d: %.0f%% in %.3fs",
                    t + 1, cid, manager.get_progress(cid), manager.get_elapsed_time(cid),
                )

            local_metrics: dict[int, LocalMetrics] = {}
            for cid in active:
                clients[cid], local_metrics[cid] = trained[cid]
            global_params = fedavg(
                [ClientUpdate(clients[c].params, clients[c].dataset.size, c) for c in active]
            )
            if not global_params.is_finite():
                raise FloatingPointError(f"global parameters became non-finite in round {t}")

            result = _round_result(t, global_params, clients, local_metrics, cfg)
            result = replace(result, wall_time=time.perf_counter() - started)
            results.append(result)
            logger.info(
                "Round %d/%d: train_loss=%.5f train_phi=%.5f test_loss=%.5f test_phi=%.5f "
                "norm=%.4f (%.2fs)",
                t + 1, cfg.T, result.mean("train_loss"), result.mean("train_phi"),
                result.mean("test_loss"), result.mean("test_phi"),
                global_norm(global_params), result.wall_time,
            )
    finally:
        if owns_manager:
            manager.shutdown()
    return results


def _round_result(
    t: int,
    global_params: ModelParams,
    clients: dict[int, ClientState],
    local_metrics: dict[int, LocalMetrics],
    cfg: FLConfig,
) -> RoundResult:
    per_client = []
    predictions, targets = [], []
    for cid in sorted(clients):
        dataset = clients[cid].dataset
        if cid in local_metrics:
            train = local_metrics[cid]
            train_loss, train_phi = train.train_loss, train.train_phi
        else:
            idle = evaluate(global_params, dataset.train_x, dataset.train_y, cfg)
            train_loss, train_phi = idle.loss, idle.phi
        test = evaluate(global_params, dataset.test_x, dataset.test_y, cfg)
        per_client.append(ClientRoundMetrics(cid, train_loss, train_phi, test.loss, test.phi))
        predictions.append(test.predictions)
        targets.append(test.targets)
    return RoundResult(
        round=t,
        global_params=global_params,
        per_client=tuple(per_client),
        test_predictions=np.concatenate(predictions),
        test_targets=np.concatenate(targets),
    )


def train_centralized(cfg: FLConfig, dataset: ClientDataset) -> list[ModelParams]:
    """Single-model training over T blocks of L epochs; parameters after each block.

    Uses the same initialization and shuffling streams as a one-client federation.
    """
    streams = SeedStreams(cfg.seed)
    params = init_params(cfg.mlp, cfg.seed)
    opt_state = init_adadelta(params, cfg.optimizer)
    history = []
    for t in range(cfg.T):
        rng = streams.generator(Stream.SHUFFLE, dataset.client_id, t)
        params, opt_state = _run_epochs(params, opt_state, dataset, cfg, rng)
        history.append(params)
    return history
