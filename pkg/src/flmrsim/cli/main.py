"""Command-line interface: generate, train, compare and demo."""
import argparse
import logging
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Any, NoReturn

from pydantic import ValidationError

from flmrsim import __version__
from flmrsim.cli import experiment
from flmrsim.cli.config_file import (
    FlatConfig,
    build_config,
    config_keys,
    merge_layers,
    parse_assignment,
    read_config_file,
)
from flmrsim.errors import ConfigurationError, DataError, FLMRError, UsageError
from flmrsim.models.config import ExperimentConfig, LossKind
from flmrsim.utils.env import env_log_level, env_out_dir, env_workers, load_environment
from flmrsim.utils.log import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

# Short aliases for the most used configuration keys.
ALIASES: dict[str, tuple[str, ...]] = {
    "fl.loss_kind": ("--loss",),
    "fl.T": ("--rounds",),
    "fl.K": ("--clients",),
    "fl.L": ("--local-epochs",),
    "fl.fuzzy.alpha": ("--alpha",),
    "fl.fuzzy.p": ("--p",),
    "out_dir": ("--out",),
    "data_dir": ("--data",),
}

# Local epochs are left open at full scale; 30 lets both objectives converge at desk scale.
DEMO_PRESET: FlatConfig = {
    "fl.K": "5",
    "fl.T": "20",
    "fl.L": "30",
    "generator.n_records": "2000",
}

_CONFIG_ERRORS = (ValidationError, ConfigurationError, UsageError, DataError, FileNotFoundError)
_RUNTIME_ERRORS = (FLMRError, ArithmeticError, RuntimeError, OSError)


class _Parser(argparse.ArgumentParser):
    """Reports bad command lines as UsageError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    parent.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
        help="Logging verbosity (default: LOG_LEVEL or INFO)",
    )
    return parent


def _config_flags() -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    parent.add_argument("--config", metavar="PATH", help="Experiment file of key = value lines")
    parent.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one configuration key (repeatable)",
    )
    parent.add_argument(
        "--seed", metavar="U64", help="Seed for both the federation and the data generator"
    )
    group = parent.add_argument_group("configuration keys")
    for key, info in config_keys():
        options = [f"--{key}", *ALIASES.get(key, ())]
        kwargs: dict[str, Any] = {"dest": key, "metavar": key.rsplit(".", 1)[-1].upper()}
        if key == "fl.loss_kind":
            kwargs["choices"] = [kind.value for kind in LossKind]
        group.add_argument(*options, help=info.description, **kwargs)
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    config = _config_flags()
    parser = _Parser(
        prog="flmr",
        description="Federated neurosymbolic CPU-load forecasting for virtual base stations",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    parents = [common, config]
    commands.add_parser(
        "generate", parents=parents, allow_abbrev=False, help="Write synthetic client CSVs"
    ).set_defaults(handler=cmd_generate)
    commands.add_parser(
        "train", parents=parents, allow_abbrev=False, help="Run one federated training"
    ).set_defaults(handler=cmd_train)
    commands.add_parser(
        "demo",
        parents=parents,
        allow_abbrev=False,
        help="Desk-scale FLMR vs DeepCog experiment (K=5, 2000 samples, T=20)",
    ).set_defaults(handler=cmd_demo)

    compare = commands.add_parser(
        "compare", parents=[common], allow_abbrev=False, help="Merge two run summaries"
    )
    compare.add_argument("flmr_summary", help="summary.json of the FLMR run")
    compare.add_argument("baseline_summary", help="summary.json of the DeepCog run")
    compare.add_argument("--out", metavar="DIR", help="Directory for the merged summary.json")
    compare.set_defaults(handler=cmd_compare)
    return parser


def _env_layer() -> FlatConfig:
    layer: FlatConfig = {}
    out_dir = env_out_dir()
    if out_dir is not None:
        layer["out_dir"] = str(out_dir)
    workers = env_workers()
    if workers is not None:
        layer["workers"] = str(workers)
    return layer


def _flag_layer(args: argparse.Namespace) -> FlatConfig:
    layer: FlatConfig = dict(parse_assignment(text) for text in args.set)
    for key, _ in config_keys():
        value = getattr(args, key, None)
        if value is not None:
            layer[key] = str(value)
    return layer


def resolve_config(
    args: argparse.Namespace, preset: Mapping[str, str] | None = None
) -> ExperimentConfig:
    """Merge preset < environment < config file < flags and validate the result."""
    file_layer = read_config_file(args.config) if args.config else {}
    layers = [dict(preset or {}), _env_layer(), file_layer]
    flags = _flag_layer(args)
    if args.seed is not None:
        seeds = {"fl.seed": args.seed}
        if "data_dir" not in merge_layers([*layers, flags]):
            seeds["generator.seed"] = args.seed
        layers.append(seeds)
    return build_config(merge_layers([*layers, flags]))


def cmd_generate(args: argparse.Namespace) -> int:
    experiment.generate(resolve_config(args))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    run = experiment.train(config)
    final = run.final_stats
    logger.info(
        "Final round: over=%.4f under=%.4f mae=%.5f over %d test samples",
        final.over_total,
        final.under_total,
        final.mean_abs_error,
        final.sample_count,
    )
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    target = args.out or env_out_dir() or experiment.DEFAULT_OUT_DIR
    experiment.compare_summaries(args.flmr_summary, args.baseline_summary, Path(target))
    return EXIT_OK


def cmd_demo(args: argparse.Namespace) -> int:
    report = experiment.demo(resolve_config(args, DEMO_PRESET))
    if report.flagged:
        logger.warning("FLMR provisioning volume was zero; ratios %s are infinite", report.infinite)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit status."""
    load_environment()
    try:
        configure_logging(env_log_level())
        args = build_parser().parse_args(argv)
        if args.log_level:
            configure_logging(args.log_level)
        handler: Callable[[argparse.Namespace], int] = args.handler
        return handler(args)
    except _CONFIG_ERRORS as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG
    except _RUNTIME_ERRORS as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME
