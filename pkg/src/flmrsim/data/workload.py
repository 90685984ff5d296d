"""vBS telemetry: CSV ingestion, synthetic generation, scaling and splitting."""
import logging
import re
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from flmrsim.core.rng import SeedStreams, Stream
from flmrsim.errors import CsvParseError, DataError, RecordValidationError, SchemaError, UsageError
from flmrsim.models.config import GeneratorConfig
from flmrsim.models.records import (
    CSV_COLUMNS,
    FEATURES,
    MCS_MAX,
    ClientDataset,
    FeatureStats,
    VbsRecord,
)

logger = logging.getLogger(__name__)

CLIENT_FILE = re.compile(r"^client_(\d+)\.csv$")
_INT_COLUMNS = {"mcs_dl", "mcs_ul", "cpu_set"}
_FLOAT_COLUMNS = {"dl_kbps", "ul_kbps", "cpu"}
_FIXED_BOUNDS = {"mcs_dl": (0.0, float(MCS_MAX)), "mcs_ul": (0.0, float(MCS_MAX))}
HETEROGENEITY_RANGE = (0.7, 1.3)
_WIDE_ROW = "\x00wide:"


def _parse_cell(column: str, value: object, row: int) -> int | float | bool:
    if not isinstance(value, str):
        raise CsvParseError(row, column, "")
    text = value.strip()
    try:
        if column in _INT_COLUMNS:
            return int(text)
        if column in _FLOAT_COLUMNS:
            return float(text)
    except ValueError:
        raise CsvParseError(row, column, value) from None
    flag = text.lower()
    if flag in ("1", "true"):
        return True
    if flag in ("0", "false"):
        return False
    raise CsvParseError(row, column, value)


def _mark_wide_row(width: int) -> Callable[[list[str]], list[str]]:
    """Replace a row with more fields than the header by a marker row load_csv rejects."""

    def mark(fields: list[str]) -> list[str]:
        return [f"{_WIDE_ROW}{fields[width]}", *[""] * (width - 1)]

    return mark


def load_csv(path: Path | str) -> list[VbsRecord]:
    """Read telemetry rows; columns are matched by name, rows numbered from 1."""
    path = Path(path)
    try:
        header = pd.read_csv(path, nrows=0, encoding="utf-8").columns
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            engine="python",
            index_col=False,
            on_bad_lines=_mark_wide_row(len(header)),
        )
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} has no header row") from None
    width = len(frame.columns)
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in CSV_COLUMNS:
        if column not in frame.columns:
            raise SchemaError(column, str(path))

    for row, first in enumerate(frame.iloc[:, 0], start=1):
        if isinstance(first, str) and first.startswith(_WIDE_ROW):
            raise CsvParseError(row, f"field {width + 1}", first.removeprefix(_WIDE_ROW))
    records = []
    for row, cells in enumerate(frame[list(CSV_COLUMNS)].itertuples(index=False), start=1):
        values = {col: _parse_cell(col, cell, row) for col, cell in zip(CSV_COLUMNS, cells)}
        try:
            records.append(VbsRecord(**values))
        except ValidationError as exc:
            detail = "; ".join(
                f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in exc.errors()
            )
            raise RecordValidationError(row, detail) from None
    logger.debug("Loaded %d records from %s", len(records), path)
    return records


def write_csv(records: Iterable[VbsRecord], path: Path | str) -> Path:
    """Write records in the canonical column order; floats round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        {
            "mcs_dl": str(r.mcs_dl),
            "mcs_ul": str(r.mcs_ul),
            "dl_kbps": repr(float(r.dl_kbps)),
            "ul_kbps": repr(float(r.ul_kbps)),
            "cpu_set": str(r.cpu_set),
            "cpu": repr(float(r.cpu)),
            "explode": "1" if r.explode else "0",
        }
        for r in records
    ]
    frame = pd.DataFrame(rows, columns=list(CSV_COLUMNS))
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def synthetic_cpu(
    cfg: GeneratorConfig,
    mcs_dl: np.ndarray | int,
    mcs_ul: np.ndarray | int,
    dl_kbps: np.ndarray | float,
    ul_kbps: np.ndarray | float,
    cpu_set: np.ndarray | int,
    noise: np.ndarray | float = 0.0,
) -> np.ndarray:
    """Raw (unclamped) CPU load of the generator's workload model.

    Uplink decoding dominates; lower MCS indices need more resource blocks
    per kbps and so cost more CPU.
    """
    ul_share = np.asarray(ul_kbps, dtype=np.float64) / cfg.ul_max_kbps
    dl_share = np.asarray(dl_kbps, dtype=np.float64) / cfg.dl_max_kbps
    ul_mcs_cost = 1.0 + cfg.mcs_ul_factor * (MCS_MAX - np.asarray(mcs_ul)) / MCS_MAX
    dl_mcs_cost = 1.0 + cfg.mcs_dl_factor * (MCS_MAX - np.asarray(mcs_dl)) / MCS_MAX
    return (
        cfg.base_load
        + cfg.ul_weight * ul_share * ul_mcs_cost
        + cfg.dl_weight * dl_share * dl_mcs_cost
        + cfg.cpu_set_offset_step * np.asarray(cpu_set)
        + noise
    )


def generate_synthetic(cfg: GeneratorConfig) -> list[VbsRecord]:
    """Draw ``cfg.n_records`` samples; identical seeds give identical lists."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_records
    ul_kbps = rng.uniform(0.0, cfg.ul_max_kbps, n)
    dl_kbps = rng.uniform(0.0, cfg.dl_max_kbps, n)
    mcs_ul = rng.integers(0, MCS_MAX + 1, n)
    mcs_dl = rng.integers(0, MCS_MAX + 1, n)
    cpu_set = rng.integers(0, cfg.cpu_set_count, n)
    noise = rng.normal(0.0, cfg.noise_sd, n)

    raw = synthetic_cpu(cfg, mcs_dl, mcs_ul, dl_kbps, ul_kbps, cpu_set, noise)
    explode = raw > cfg.explode_threshold
    cpu = np.clip(raw, 0.0, 1.0)
    return [
        VbsRecord(
            mcs_dl=int(mcs_dl[i]),
            mcs_ul=int(mcs_ul[i]),
            dl_kbps=float(dl_kbps[i]),
            ul_kbps=float(ul_kbps[i]),
            cpu_set=int(cpu_set[i]),
            cpu=float(cpu[i]),
            explode=bool(explode[i]),
        )
        for i in range(n)
    ]


def client_generator_config(base: GeneratorConfig, client_id: int) -> GeneratorConfig:
    """Per-client perturbation: traffic maxima scaled by a seeded factor in [0.7, 1.3]."""
    streams = SeedStreams(base.seed)
    factor = streams.generator(Stream.HETEROGENEITY, client_id).uniform(*HETEROGENEITY_RANGE)
    settings = base.model_dump()
    settings.update(
        seed=streams.child_seed(Stream.HETEROGENEITY, client_id),
        ul_max_kbps=base.ul_max_kbps * factor,
        dl_max_kbps=base.dl_max_kbps * factor,
    )
    return GeneratorConfig(**settings)


def filter_exploded(records: Sequence[VbsRecord]) -> list[VbsRecord]:
    """Keep only rows of experiments that ran correctly, in order."""
    return [r for r in records if not r.explode]


def _feature_matrix(records: Sequence[VbsRecord]) -> np.ndarray:
    return np.array([[getattr(r, f) for f in FEATURES] for r in records], dtype=np.float64)


def fit_normalizer(records: Sequence[VbsRecord]) -> FeatureStats:
    """Min/max per feature; MCS indices always use the fixed 0..28 range."""
    if not records:
        raise UsageError("cannot fit a normalizer on zero records")
    matrix = _feature_matrix(records)
    mins, maxs = [], []
    for index, feature in enumerate(FEATURES):
        low, high = _FIXED_BOUNDS.get(
            feature, (float(matrix[:, index].min()), float(matrix[:, index].max()))
        )
        mins.append(low)
        maxs.append(high)
    return FeatureStats(mins=tuple(mins), maxs=tuple(maxs))


def normalize(
    records: Sequence[VbsRecord], stats: FeatureStats
) -> tuple[np.ndarray, np.ndarray]:
    """Min-max scaled features (degenerate ones map to 0) and raw CPU targets."""
    if not records:
        return np.empty((0, len(FEATURES))), np.empty(0)
    mins = np.array(stats.mins)
    spans = np.array(stats.maxs) - mins
    degenerate = spans == 0.0
    scaled = (_feature_matrix(records) - mins) / np.where(degenerate, 1.0, spans)
    scaled[:, degenerate] = 0.0
    targets = np.array([r.cpu for r in records], dtype=np.float64)
    return scaled, targets


def denormalize(features: np.ndarray, stats: FeatureStats) -> np.ndarray:
    """Map scaled features back to raw units; degenerate features return their min."""
    mins = np.array(stats.mins)
    spans = np.array(stats.maxs) - mins
    return np.asarray(features, dtype=np.float64) * spans + mins


def split(
    records: Sequence[VbsRecord], test_fraction: float, seed: int
) -> tuple[list[VbsRecord], list[VbsRecord]]:
    """Seeded shuffled split with round(test_fraction * n) test rows."""
    n = len(records)
    if n < 2:
        raise UsageError(f"need at least 2 records to split, got {n}")
    if not 0.0 < test_fraction < 1.0:
        raise UsageError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    order = np.random.default_rng(seed).permutation(n)
    n_test = round(test_fraction * n)
    test = [records[i] for i in order[:n_test]]
    train = [records[i] for i in order[n_test:]]
    return train, test


def build_client_dataset(
    client_id: int,
    records: Sequence[VbsRecord],
    test_fraction: float,
    seed: int,
    drop_exploded: bool = True,
) -> ClientDataset:
    """Filter, split and scale one client's rows; scaling is fitted on training rows."""
    kept = filter_exploded(records) if drop_exploded else list(records)
    split_seed = SeedStreams(seed).child_seed(Stream.SPLIT, client_id)
    train, test = split(kept, test_fraction, split_seed)
    if not train or not test:
        raise DataError(f"client {client_id}: {len(kept)} usable rows give an empty split")
    stats = fit_normalizer(train)
    train_x, train_y = normalize(train, stats)
    test_x, test_y = normalize(test, stats)
    if len(kept) < len(records):
        logger.debug("Client %d: dropped %d exploded rows", client_id, len(records) - len(kept))
    return ClientDataset(
        client_id=client_id,
        records=tuple(train),
        feature_stats=stats,
        train_x=train_x,
        train_y=train_y,
        test_records=tuple(test),
        test_x=test_x,
        test_y=test_y,
    )


def generate_clients(base: GeneratorConfig, num_clients: int) -> dict[int, list[VbsRecord]]:
    """Synthetic records for clients 0..num_clients-1."""
    if num_clients < 1:
        raise UsageError(f"need at least one client, got {num_clients}")
    return {
        k: generate_synthetic(client_generator_config(base, k)) for k in range(num_clients)
    }


def client_path(directory: Path, client_id: int) -> Path:
    return directory / f"client_{client_id}.csv"


def load_client_dir(directory: Path | str) -> dict[int, list[VbsRecord]]:
    """Read every client_<id>.csv of a directory, keyed and ordered by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"data directory {directory} does not exist")
    found = {}
    for path in directory.iterdir():
        match = CLIENT_FILE.match(path.name)
        if match:
            found[int(match.group(1))] = path
    if not found:
        raise DataError(f"no client_<id>.csv files in {directory}")
    return {k: load_csv(found[k]) for k in sorted(found)}
