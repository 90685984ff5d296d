"""Prediction errors, provisioning trade-off statistics and report files."""
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import orjson
import pandas as pd

from flmrsim.errors import DataError, ShapeError, UsageError
from flmrsim.models.config import LossKind
from flmrsim.models.reports import ComparisonReport, ProvisioningStats, RoundResult

logger = logging.getLogger(__name__)

DUMP_SAMPLES = 100
ROUNDS_FILE = "rounds.csv"
ERRORS_FIRST_FILE = "errors_round0.csv"
ERRORS_FINAL_FILE = "errors_final.csv"
PROVISIONING_FILE = "provisioning.csv"
PREDICTIONS_FILE = "predictions_final.csv"
SUMMARY_FILE = "summary.json"
INF_SENTINEL = "inf"

_SUMMARY_KEY = {LossKind.FLMR: "flmr", LossKind.DEEPCOG: "baseline"}


def prediction_errors(predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """P_err = predicted - measured, element-wise."""
    predictions = np.asarray(predictions, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if predictions.shape != targets.shape:
        raise ShapeError(f"{predictions.size} predictions for {targets.size} targets")
    return predictions - targets


def provisioning_decomposition(errors: np.ndarray) -> ProvisioningStats:
    """Split errors into overprovisioning (positive) and underprovisioning (negative) volume."""
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if errors.size == 0:
        raise UsageError("cannot decompose an empty error list")
    over = errors > 0.0
    under = errors < 0.0
    return ProvisioningStats(
        over_total=float(np.sum(errors[over])),
        under_total=float(np.sum(-errors[under])),
        over_count=int(over.sum()),
        under_count=int(under.sum()),
        mean_abs_error=float(np.mean(np.abs(errors))),
        sample_count=int(errors.size),
    )


def _ratio(baseline: float, flmr: float) -> float:
    if flmr == 0.0:
        return 1.0 if baseline == 0.0 else math.inf
    return baseline / flmr


def compare(flmr: ProvisioningStats, base: ProvisioningStats) -> ComparisonReport:
    """Baseline-over-FLMR ratios of provisioning volume; zero FLMR volume gives inf."""
    ratios = {
        "over_ratio": _ratio(base.over_total, flmr.over_total),
        "under_ratio": _ratio(base.under_total, flmr.under_total),
        "combined_ratio": _ratio(base.combined_total, flmr.combined_total),
    }
    infinite = tuple(name for name, value in ratios.items() if math.isinf(value))
    if infinite:
        logger.warning("FLMR provisioning volume is zero for %s", ", ".join(infinite))
    return ComparisonReport(flmr=flmr, baseline=base, infinite=infinite, **ratios)


def round_provisioning(results: Sequence[RoundResult]) -> list[ProvisioningStats]:
    """ProvisioningStats of the pooled test predictions of every round."""
    return [
        provisioning_decomposition(prediction_errors(r.test_predictions, r.test_targets))
        for r in results
    ]


def round_summary(result: RoundResult, loss_kind: LossKind) -> dict[str, float]:
    """Client-averaged round metrics; FLMR losses are reported as 1 - mean phi."""
    train_phi = result.mean("train_phi")
    test_phi = result.mean("test_phi")
    if loss_kind is LossKind.FLMR:
        train_loss, test_loss = 1.0 - train_phi, 1.0 - test_phi
    else:
        train_loss, test_loss = result.mean("train_loss"), result.mean("test_loss")
    return {
        "train_loss": train_loss,
        "train_phi": train_phi,
        "test_loss": test_loss,
        "test_phi": test_phi,
    }


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_table(path: Path, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    frame = pd.DataFrame([[_cell(v) for v in row] for row in rows], columns=list(columns))
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def _stats_json(stats: ProvisioningStats) -> dict[str, Any]:
    return stats.model_dump()


def _ratio_json(value: float) -> float | str:
    return INF_SENTINEL if math.isinf(value) else value


def summary_document(
    stats: dict[str, ProvisioningStats], comparison: ComparisonReport | None = None
) -> dict[str, Any]:
    """JSON-ready summary with ``flmr``/``baseline`` stats and optional ``ratios``."""
    document: dict[str, Any] = {key: _stats_json(value) for key, value in stats.items()}
    if comparison is not None:
        document["flmr"] = _stats_json(comparison.flmr)
        document["baseline"] = _stats_json(comparison.baseline)
        document["ratios"] = {
            "over_ratio": _ratio_json(comparison.over_ratio),
            "under_ratio": _ratio_json(comparison.under_ratio),
            "combined_ratio": _ratio_json(comparison.combined_ratio),
            "infinite": list(comparison.infinite),
        }
    return document


def write_summary(document: dict[str, Any], path: Path) -> Path:
    """Write a summary document as sorted, indented UTF-8 JSON."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = orjson.dumps(document, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)
    path.write_bytes(payload + b"\n")
    return path


def load_summary(path: Path | str) -> dict[str, ProvisioningStats]:
    """ProvisioningStats stored under the ``flmr`` and ``baseline`` keys of a summary file."""
    try:
        document = orjson.loads(Path(path).read_bytes())
    except orjson.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed summary ({exc})") from exc
    if not isinstance(document, dict):
        raise DataError(f"{path}: summary must be a JSON object")
    stats: dict[str, ProvisioningStats] = {}
    for key in ("flmr", "baseline"):
        if key not in document:
            continue
        if not isinstance(document[key], dict):
            raise DataError(f"{path}: '{key}' entry must be a JSON object")
        stats[key] = ProvisioningStats(**document[key])
    return stats


def emit_reports(
    results: Sequence[RoundResult],
    stats: Sequence[ProvisioningStats],
    out_dir: Path | str,
    loss_kind: LossKind = LossKind.FLMR,
    comparison: ComparisonReport | None = None,
) -> list[Path]:
    """Write the per-round tables, first/final error dumps and summary.json."""
    if not results:
        raise UsageError("no round results to report")
    if len(stats) != len(results):
        raise UsageError(f"{len(stats)} provisioning entries for {len(results)} rounds")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rounds = []
    for result in results:
        summary = round_summary(result, loss_kind)
        rounds.append([result.round, *summary.values()])
    written = [
        _write_table(
            out / ROUNDS_FILE,
            ["round", "train_loss", "train_phi", "test_loss", "test_phi"],
            rounds,
        )
    ]

    for name, result in ((ERRORS_FIRST_FILE, results[0]), (ERRORS_FINAL_FILE, results[-1])):
        errors = prediction_errors(result.test_predictions, result.test_targets)[:DUMP_SAMPLES]
        written.append(
            _write_table(out / name, ["sample_index", "p_err"], list(enumerate(errors)))
        )

    final = results[-1]
    pairs = zip(final.test_predictions[:DUMP_SAMPLES], final.test_targets[:DUMP_SAMPLES])
    written.append(
        _write_table(
            out / PREDICTIONS_FILE,
            ["sample_index", "predicted", "measured"],
            [(i, p, m) for i, (p, m) in enumerate(pairs)],
        )
    )
    written.append(
        _write_table(
            out / PROVISIONING_FILE,
            ["round", *ProvisioningStats.model_fields],
            [[r.round, *s.model_dump().values()] for r, s in zip(results, stats)],
        )
    )

    document = summary_document({_SUMMARY_KEY[loss_kind]: stats[-1]}, comparison)
    written.append(write_summary(document, out / SUMMARY_FILE))
    logger.info("Wrote %d report files to %s", len(written), out)
    return written
