"""
Experiment configuration: command-line flags, a flat key=value file and the
BRANCHSIM_* environment, merged in that order of precedence.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path
from typing import Any, Callable, Final, Mapping

from dotenv import dotenv_values
from typeguard import TypeCheckError, check_type

from branchsim.exceptions import ConfigurationError, FileOperationError
from branchsim.interpretations.schedule import Interpretation
from branchsim.protocols.deutsch import DeutschMode
from branchsim.protocols.disaster import Scenario
from utils.env_config import (
    DEFAULT_SEED,
    UINT64_MAX,
    load_environment,
    resolve_default_seed,
    resolve_output_dir,
)


logger = logging.getLogger(__name__)


class Experiment(StrEnum):
    DEUTSCH = "deutsch"
    DISASTER = "disaster"
    SWEEP = "sweep"
    VERIFY = "verify"


class InterpretationChoice(StrEnum):
    MWI = "mwi"
    COLLAPSE = "collapse"
    BOTH = "both"

    @property
    def interpretations(self) -> tuple[Interpretation, ...]:
        if self is InterpretationChoice.BOTH:
            return (Interpretation.MWI, Interpretation.COLLAPSE)
        return (Interpretation(self.value),)


DEFAULT_TRIALS: Final[dict[Experiment, int]] = {
    Experiment.DEUTSCH: 10_000,
    Experiment.DISASTER: 100_000,
    Experiment.SWEEP: 2_000,
    Experiment.VERIFY: 100_000,
}

GRID_P: Final[tuple[float, ...]] = (0.0, 0.01, 0.1, 0.2, 0.5, 0.9, 1.0)
GRID_Q: Final[tuple[float, ...]] = (0.0, 0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    interpretation: InterpretationChoice = InterpretationChoice.BOTH
    p: float = 0.01
    q: float = 0.1
    scenario: Scenario = Scenario.UNCORRELATED
    mode: DeutschMode = DeutschMode.REVERSIBLE
    basis: str = "x"
    trials: int = 10_000
    seed: int = DEFAULT_SEED
    out: Path | None = None
    macrostate_count: int | None = None
    backup_index: int | None = None
    p_list: tuple[float, ...] = GRID_P
    q_list: tuple[float, ...] = GRID_Q
    confidence: float = 0.95
    workers: int = 1
    sources: dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for name in ("p", "q"):
            _require_probability(name, getattr(self, name))
        for name in ("p_list", "q_list"):
            values = getattr(self, name)
            if not values:
                raise ConfigurationError(name, "a non-empty list of probabilities")
            for value in values:
                _require_probability(name, value)
        if self.trials < 1:
            raise ConfigurationError("trials", "an integer >= 1")
        if not 0 <= self.seed <= UINT64_MAX:
            raise ConfigurationError("seed", "an unsigned 64-bit integer")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigurationError("confidence", "a number strictly between 0 and 1")
        if self.workers < 1:
            raise ConfigurationError("workers", "an integer >= 1")
        if self.basis not in ("x", "z"):
            raise ConfigurationError("basis", "x or z")
        if self.macrostate_count is not None and self.macrostate_count < 2:
            raise ConfigurationError("macrostate_count", "an integer >= 2")

    @property
    def summary_path(self) -> Path | None:
        if self.out is None:
            return None
        return self.out.with_name(self.out.name + ".summary.csv")


def _require_probability(name: str, value: float) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ConfigurationError(name, f"a probability in [0, 1], got {value!r}")


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.replace(",", " ").split())


_PARSERS: Final[dict[str, Callable[[str], Any]]] = {
    "p": float,
    "q": float,
    "trials": int,
    "seed": lambda raw: int(raw, 0),
    "interpretation": InterpretationChoice,
    "scenario": Scenario,
    "mode": DeutschMode,
    "basis": str.strip,
    "out": Path,
    "macrostate_count": int,
    "backup_index": int,
    "p_list": _float_list,
    "q_list": _float_list,
    "confidence": float,
    "workers": int,
}

_EXPECTED_TYPES: Final[dict[str, Any]] = {
    "p": float,
    "q": float,
    "trials": int,
    "seed": int,
    "interpretation": InterpretationChoice,
    "scenario": Scenario,
    "mode": DeutschMode,
    "basis": str,
    "out": Path,
    "macrostate_count": int,
    "backup_index": int,
    "p_list": tuple[float, ...],
    "q_list": tuple[float, ...],
    "confidence": float,
    "workers": int,
}

CONFIG_KEYS: Final[frozenset[str]] = frozenset(_PARSERS)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat UTF-8 key=value file; '#' comments and blank lines are ignored."""
    path = Path(path)
    if not path.is_file():
        raise FileOperationError("read config", str(path), "file does not exist")
    try:
        raw = dotenv_values(path, encoding="utf-8", interpolate=False)
    except (OSError, UnicodeDecodeError) as exc:
        raise FileOperationError("read config", str(path), str(exc)) from exc
    values: dict[str, str] = {}
    for key, value in raw.items():
        key = key.strip().lower()
        if key not in CONFIG_KEYS:
            raise ConfigurationError(key, f"one of {sorted(CONFIG_KEYS)}")
        if value is None or not value.strip():
            raise ConfigurationError(key, "a non-empty value")
        values[key] = value.strip()
    return values


def _coerce(key: str, value: object) -> object:
    try:
        if isinstance(value, str):
            value = _PARSERS[key](value)
        elif key in ("p_list", "q_list"):
            value = tuple(float(v) for v in value)  # type: ignore[union-attr]
        elif key in ("p", "q", "confidence") and isinstance(value, int):
            value = float(value)
        elif key == "out" and not isinstance(value, Path):
            value = Path(str(value))
        return check_type(value, _EXPECTED_TYPES[key])
    except (TypeCheckError, TypeError, ValueError) as exc:
        raise ConfigurationError(key, f"a valid {key} value ({exc})") from exc


def build_config(experiment: Experiment | str, values: Mapping[str, object]) -> ExperimentConfig:
    experiment = Experiment(experiment)
    unknown = set(values) - CONFIG_KEYS
    if unknown:
        raise ConfigurationError(", ".join(sorted(unknown)), f"one of {sorted(CONFIG_KEYS)}")
    coerced = {key: _coerce(key, value) for key, value in values.items() if value is not None}
    coerced.setdefault("trials", DEFAULT_TRIALS[experiment])
    return ExperimentConfig(experiment=experiment, **coerced)  # type: ignore[arg-type]


def load_config(
    experiment: Experiment | str,
    *,
    flags: Mapping[str, object] | None = None,
    config_path: str | Path | None = None,
) -> ExperimentConfig:
    """Merge flags > config file > environment > defaults into one ExperimentConfig."""
    experiment = Experiment(experiment)
    load_environment()
    sources: dict[str, str] = {}
    values: dict[str, object] = {}

    try:
        values["seed"] = resolve_default_seed()
    except ValueError as exc:
        raise ConfigurationError("BRANCHSIM_SEED", str(exc)) from exc
    values["out"] = resolve_output_dir() / f"{experiment.value}.csv"
    sources.update(seed="environment", out="environment")

    if config_path is not None:
        for key, value in read_config_file(config_path).items():
            values[key] = value
            sources[key] = "file"
    for key, value in (flags or {}).items():
        if value is not None:
            values[key] = value
            sources[key] = "flag"

    config = build_config(experiment, values)
    logger.debug("Resolved %s config from %s", experiment, sources)
    return replace(config, sources=sources)
