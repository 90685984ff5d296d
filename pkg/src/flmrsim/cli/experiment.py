"""Experiment orchestration behind the generate, train, compare and demo commands."""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from flmrsim.cli.config_file import render_config
from flmrsim.core.federation import run_federation
from flmrsim.core.task_manager import ClientTaskManager
from flmrsim.data.workload import (
    build_client_dataset,
    client_path,
    generate_clients,
    load_client_dir,
    write_csv,
)
from flmrsim.errors import ConfigurationError
from flmrsim.metrics.report import (
    SUMMARY_FILE,
    compare,
    emit_reports,
    load_summary,
    round_provisioning,
    summary_document,
    write_summary,
)
from flmrsim.models.config import ExperimentConfig, GeneratorConfig, LossKind
from flmrsim.models.records import ClientDataset, VbsRecord
from flmrsim.models.reports import ComparisonReport, ProvisioningStats, RoundResult

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = Path("results")
CONFIG_FILE = "config.conf"
# Paths and worker counts do not change results and stay out of the emitted tree.
_RUN_ONLY_KEYS = {"out_dir", "workers", "data_dir"}

ClientRecords = dict[int, list[VbsRecord]]


@dataclass
class TrainingRun:
    """Round results and provisioning statistics of one training run."""

    config: ExperimentConfig
    results: list[RoundResult]
    stats: list[ProvisioningStats]
    written: list[Path] = field(default_factory=list)

    @property
    def final_stats(self) -> ProvisioningStats:
        return self.stats[-1]


def out_dir(config: ExperimentConfig) -> Path:
    return config.out_dir if config.out_dir is not None else DEFAULT_OUT_DIR


def load_records(config: ExperimentConfig) -> ClientRecords:
    """Client records from the configured directory, or freshly generated."""
    if config.data_dir is not None:
        records = load_client_dir(config.data_dir)
        if len(records) != config.fl.K:
            raise ConfigurationError(
                f"{config.data_dir} holds {len(records)} clients but fl.K = {config.fl.K}"
            )
        return records
    return generate_clients(_generator(config), config.fl.K)


def write_clients(records: ClientRecords, directory: Path) -> list[Path]:
    """One client_<id>.csv per client."""
    directory.mkdir(parents=True, exist_ok=True)
    return [write_csv(rows, client_path(directory, cid)) for cid, rows in records.items()]


def build_datasets(records: ClientRecords, config: ExperimentConfig) -> list[ClientDataset]:
    fl = config.fl
    return [
        build_client_dataset(cid, rows, fl.test_fraction, fl.seed, fl.drop_exploded)
        for cid, rows in sorted(records.items())
    ]


def _generator(config: ExperimentConfig) -> GeneratorConfig:
    if config.generator is None:
        raise ConfigurationError("synthetic data needs generator settings, not a data directory")
    return config.generator


def generate(config: ExperimentConfig) -> list[Path]:
    """Write K synthetic client files into the output directory."""
    written = write_clients(generate_clients(_generator(config), config.fl.K), out_dir(config))
    logger.info("Generated %d client files in %s", len(written), out_dir(config))
    return written


def train(config: ExperimentConfig, records: ClientRecords | None = None) -> TrainingRun:
    """Run one federation end to end and emit its reports."""
    started = time.perf_counter()
    records = records if records is not None else load_records(config)
    datasets = build_datasets(records, config)
    logger.info(
        "[%s] training %s on %d clients (%d training samples)",
        config.label,
        config.fl.loss_kind.value,
        len(datasets),
        sum(d.size for d in datasets),
    )
    with ClientTaskManager(config.workers) as manager:
        results = run_federation(config.fl, datasets, config.workers, manager)
    stats = round_provisioning(results)

    target = out_dir(config)
    written = emit_reports(results, stats, target, config.fl.loss_kind)
    config_path = target / CONFIG_FILE
    config_path.write_text(render_config(config, exclude=_RUN_ONLY_KEYS), encoding="utf-8")
    written.append(config_path)
    logger.info("[%s] finished in %.2fs", config.label, time.perf_counter() - started)
    return TrainingRun(config, results, stats, written)


def _run_stats(path: Path | str, key: str) -> ProvisioningStats:
    """Statistics stored under ``key``, or the only statistics a summary holds."""
    stored = load_summary(path)
    if key in stored:
        return stored[key]
    if len(stored) == 1:
        return next(iter(stored.values()))
    raise ConfigurationError(f"{path} has no '{key}' statistics")


def compare_summaries(
    flmr_summary: Path | str, baseline_summary: Path | str, target: Path
) -> ComparisonReport:
    """Merge an FLMR and a DeepCog summary into ``target/summary.json`` with ratios."""
    report = compare(_run_stats(flmr_summary, "flmr"), _run_stats(baseline_summary, "baseline"))
    write_summary(summary_document({}, report), target / SUMMARY_FILE)
    logger.info(
        "Baseline/FLMR provisioning ratios: over=%s under=%s combined=%s",
        report.over_ratio,
        report.under_ratio,
        report.combined_ratio,
    )
    return report


def demo(config: ExperimentConfig) -> ComparisonReport:
    """Generate one dataset, train FLMR and DeepCog on it, and compare them."""
    if config.data_dir is not None:
        raise ConfigurationError("demo generates its own data; drop --data")
    root = out_dir(config)
    records = generate_clients(_generator(config), config.fl.K)
    write_clients(records, root / "data")

    for kind, name in ((LossKind.FLMR, "flmr"), (LossKind.DEEPCOG, "deepcog")):
        run_config = config.model_copy(
            update={
                "fl": config.fl.model_copy(update={"loss_kind": kind}),
                "out_dir": root / name,
                "label": f"{config.label}-{name}",
            }
        )
        train(run_config, records)
    return compare_summaries(
        root / "flmr" / SUMMARY_FILE, root / "deepcog" / SUMMARY_FILE, root
    )
