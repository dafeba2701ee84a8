"""Binomial proportions with Wilson score intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.stats import norm
from typeguard import typechecked


@typechecked
def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    phat = successes / trials
    z2 = z * z
    denominator = 1.0 + z2 / trials
    centre = (phat + z2 / (2.0 * trials)) / denominator
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denominator
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    return low, high


@dataclass(frozen=True)
class Proportion:
    successes: int
    trials: int
    confidence: float = 0.95

    @property
    def estimate(self) -> float:
        return self.successes / self.trials if self.trials else math.nan

    @property
    def interval(self) -> tuple[float, float]:
        if self.trials == 0:
            return math.nan, math.nan
        return wilson_interval(self.successes, self.trials, self.confidence)

    def contains(self, value: float) -> bool:
        low, high = self.interval
        return low <= value <= high
