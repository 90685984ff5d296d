"""Flat ``key = value`` experiment files and the dotted-key view of ExperimentConfig."""
import logging
import types
from collections.abc import Iterator, Mapping, Sequence
from pathlib import Path
from typing import Any, Union, get_args, get_origin

from pydantic import BaseModel
from pydantic.fields import FieldInfo

from flmrsim.errors import ConfigurationError
from flmrsim.models.config import ExperimentConfig

logger = logging.getLogger(__name__)

FlatConfig = dict[str, str]


def parse_config_text(text: str, source: str = "<config>") -> FlatConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, later keys win."""
    settings: FlatConfig = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value', got {raw!r}")
        if key in settings:
            logger.warning("%s:%d: '%s' set more than once", source, number, key)
        settings[key] = value
    return settings


def read_config_file(path: Path | str) -> FlatConfig:
    """Read an experiment file; a missing file raises FileNotFoundError."""
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def parse_assignment(text: str) -> tuple[str, str]:
    """Split one ``KEY=VALUE`` command-line override."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def nest(flat: Mapping[str, str]) -> dict[str, Any]:
    """Turn dotted keys into nested dictionaries."""
    tree: dict[str, Any] = {}
    for key in sorted(flat):
        *groups, leaf = key.split(".")
        node = tree
        for depth, group in enumerate(groups):
            child = node.setdefault(group, {})
            if not isinstance(child, dict):
                raise ConfigurationError(
                    f"'{'.'.join(groups[: depth + 1])}' is a value, not a group (key '{key}')"
                )
            node = child
        if isinstance(node.get(leaf), dict):
            raise ConfigurationError(f"'{key}' is a group, not a value")
        node[leaf] = flat[key]
    return tree


def merge_layers(layers: Sequence[Mapping[str, str]]) -> FlatConfig:
    """Later layers override earlier ones key by key."""
    merged: FlatConfig = {}
    for layer in layers:
        merged.update(layer)
    return merged


def build_config(flat: Mapping[str, str]) -> ExperimentConfig:
    """Validate dotted settings into an ExperimentConfig (raises pydantic.ValidationError)."""
    return ExperimentConfig(**nest(flat))


def _nested_model(annotation: Any) -> type[BaseModel] | None:
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    if get_origin(annotation) in (Union, types.UnionType):
        for arg in get_args(annotation):
            if isinstance(arg, type) and issubclass(arg, BaseModel):
                return arg
    return None


def config_keys(
    model: type[BaseModel] = ExperimentConfig, prefix: str = ""
) -> Iterator[tuple[str, FieldInfo]]:
    """Every settable dotted key of a configuration model, depth first."""
    for name, info in model.model_fields.items():
        nested = _nested_model(info.annotation)
        if nested is not None:
            yield from config_keys(nested, f"{prefix}{name}.")
        else:
            yield f"{prefix}{name}", info


def render_config(config: ExperimentConfig, exclude: set[str] | None = None) -> str:
    """The flat file form of a configuration; parses back to an equal model."""
    data = config.model_dump(mode="json", exclude_none=True, exclude=exclude)
    lines = []

    def walk(node: Mapping[str, Any], prefix: str) -> None:
        for key, value in node.items():
            if isinstance(value, dict):
                walk(value, f"{prefix}{key}.")
            elif isinstance(value, bool):
                lines.append(f"{prefix}{key} = {str(value).lower()}")
            elif isinstance(value, list):
                lines.append(f"{prefix}{key} = {','.join(str(v) for v in value)}")
            else:
                lines.append(f"{prefix}{key} = {value}")

    walk(data, "")
    return "\n".join(lines) + "\n"
