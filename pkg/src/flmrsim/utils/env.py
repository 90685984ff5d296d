"""Environment-variable fallbacks, optionally loaded from a .env file."""
import os
from pathlib import Path

from dotenv import find_dotenv, load_dotenv

from flmrsim.errors import ConfigurationError

OUT_DIR_VAR = "FLMR_OUT_DIR"
WORKERS_VAR = "FLMR_WORKERS"
LOG_LEVEL_VAR = "LOG_LEVEL"


def load_environment(dotenv_path: Path | None = None) -> None:
    """Load .env (searched upward from the working directory) without overriding set variables."""
    load_dotenv(dotenv_path=dotenv_path or find_dotenv(usecwd=True), override=False)


def env_out_dir() -> Path | None:
    """Output directory from FLMR_OUT_DIR, if set."""
    value = os.environ.get(OUT_DIR_VAR)
    return Path(value) if value else None


def env_workers() -> int | None:
    """Worker count from FLMR_WORKERS, if set."""
    value = os.environ.get(WORKERS_VAR)
    if not value:
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{WORKERS_VAR} must be an integer, got {value!r}") from None


def env_log_level(default: str = "INFO") -> str:
    """Log level from LOG_LEVEL."""
    return os.environ.get(LOG_LEVEL_VAR, default)
