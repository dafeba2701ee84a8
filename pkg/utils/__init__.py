from .env_config import (
    DEFAULT_SEED,
    load_environment,
    resolve_default_seed,
    resolve_log_level,
    resolve_output_dir,
)

__all__ = [
    "DEFAULT_SEED",
    "load_environment",
    "resolve_default_seed",
    "resolve_log_level",
    "resolve_output_dir",
]
