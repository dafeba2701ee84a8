"""
Shared environment configuration helpers.

Several entrypoints in this repo need to:
- Load a local .env file once, without overriding variables already exported
- Resolve the log level, default master seed and output directory
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Final

from dotenv import load_dotenv


DEFAULT_LOG_LEVEL: Final[str] = "WARNING"
DEFAULT_SEED: Final[int] = 20261017
UINT64_MAX: Final[int] = (1 << 64) - 1

_loaded = False


def load_environment(*, dotenv_path: str | Path | None = None) -> bool:
    """
    Load BRANCHSIM_* variables from a .env file into os.environ (first call only).
    Returns True when a file was found and read.
    """
    global _loaded
    if _loaded and dotenv_path is None:
        return False
    _loaded = True
    # Exported variables win over the file.
    return load_dotenv(dotenv_path=dotenv_path, override=False)


def resolve_log_level(*, cli_value: str | None = None) -> int:
    """Flag, then BRANCHSIM_LOG_LEVEL, then WARNING."""
    name = (cli_value or os.getenv("BRANCHSIM_LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        logging.getLogger(__name__).warning("Unknown log level %r, using %s", name, DEFAULT_LOG_LEVEL)
        return logging.WARNING
    return level


def resolve_default_seed(*, fallback_seed: int | None = None) -> int:
    """
    Master seed used when neither a flag nor the config file sets one.

    Reads BRANCHSIM_SEED; the value must be an unsigned 64-bit integer.
    """
    if fallback_seed is None:
        fallback_seed = DEFAULT_SEED
    raw = os.getenv("BRANCHSIM_SEED")
    if raw is None or not raw.strip():
        return fallback_seed
    seed = int(raw.strip(), 0)
    if not 0 <= seed <= UINT64_MAX:
        raise ValueError(f"BRANCHSIM_SEED must be an unsigned 64-bit integer, got {raw!r}")
    return seed


def resolve_output_dir(*, fallback_dir: str | Path | None = None) -> Path:
    """Directory for default output files: BRANCHSIM_OUTPUT_DIR, else fallback, else cwd."""
    configured = os.getenv("BRANCHSIM_OUTPUT_DIR") or fallback_dir or "."
    return Path(configured)
