"""Logging setup for command-line runs."""
import logging
import sys

from flmrsim.errors import ConfigurationError

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str | int = "INFO") -> None:
    """Send flmrsim log records to stderr at the given level."""
    if isinstance(level, str):
        level = level.upper()
    root = logging.getLogger("flmrsim")
    try:
        root.setLevel(level)
    except ValueError as exc:
        raise ConfigurationError(f"unknown log level {level!r}") from exc
    # Re-running main() in one process must not stack handlers.
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.propagate = False
