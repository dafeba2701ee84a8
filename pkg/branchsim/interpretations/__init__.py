"""Schedules and their execution under the Many-Worlds and collapse interpretations."""

from .execution import (
    ExecutionTrace,
    ReadoutRecord,
    ScheduleRunner,
    TraceLeaf,
    empirical_distribution,
    execute,
    statistics_equal,
)
from .schedule import ApplyStep, EraseStep, Interpretation, ReadoutStep, Schedule, Step

__all__ = [
    "ApplyStep",
    "EraseStep",
    "ExecutionTrace",
    "Interpretation",
    "ReadoutRecord",
    "ReadoutStep",
    "Schedule",
    "ScheduleRunner",
    "Step",
    "TraceLeaf",
    "empirical_distribution",
    "execute",
    "statistics_equal",
]
