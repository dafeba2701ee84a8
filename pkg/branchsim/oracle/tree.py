"""
Classical probability tree of one backup/cycle/reset round.

Exact rational arithmetic is used whenever both parameters are ratios of
integers (ints, Fractions, "a/b" strings, or floats that round-trip through a
denominator of at most 10**6); otherwise the tree is evaluated in doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Final, Literal

from branchsim.exceptions import ProbabilityRangeError, UndefinedConditionalError
from branchsim.observer.model import BranchGroup


MAX_EXACT_DENOMINATOR: Final[int] = 10**6

Probability = Fraction | float
PostReset = Literal["disaster", "no_disaster"]


@dataclass(frozen=True)
class OutcomeLeaf:
    group: BranchGroup
    post_reset: PostReset | None
    probability: Probability

    @property
    def reset(self) -> bool:
        return self.post_reset is not None


@dataclass(frozen=True)
class OutcomeTree:
    leaves: tuple[OutcomeLeaf, ...]
    exact: bool
    p: Probability
    q: Probability

    def total(self) -> Probability:
        return self._sum(leaf.probability for leaf in self.leaves)

    def _sum(self, values) -> Probability:
        values = list(values)
        if self.exact:
            return sum(values, Fraction(0))
        return math.fsum(values)

    def p_reset(self) -> Probability:
        return self._sum(leaf.probability for leaf in self.leaves if leaf.reset)

    def p_dis(self) -> Probability:
        """Disaster share of the reset subtree, renormalized."""
        reset = self.p_reset()
        if reset == 0:
            raise UndefinedConditionalError(self.p, self.q)
        disaster = self._sum(
            leaf.probability for leaf in self.leaves if leaf.post_reset == "disaster"
        )
        return disaster / reset


def _as_exact(name: str, value: object) -> Fraction | None:
    if isinstance(value, bool):
        raise ProbabilityRangeError(name, value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ProbabilityRangeError(name, value) from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ProbabilityRangeError(name, value)
        candidate = Fraction(value).limit_denominator(MAX_EXACT_DENOMINATOR)
        return candidate if float(candidate) == value else None
    raise ProbabilityRangeError(name, value)


def _checked(name: str, value: Probability) -> Probability:
    if not 0 <= value <= 1:
        raise ProbabilityRangeError(name, value)
    return value


def enumerate_outcomes(p: object, q: object) -> OutcomeTree:
    """Leaves (k1, disaster, p), (k2, no_disaster, (1-p)q), (k3, -, (1-p)(1-q)).

    Leaves of zero mass are dropped.
    """
    exact_p, exact_q = _as_exact("p", p), _as_exact("q", q)
    exact = exact_p is not None and exact_q is not None
    if exact:
        assert exact_p is not None and exact_q is not None
        pp: Probability = _checked("p", exact_p)
        qq: Probability = _checked("q", exact_q)
        one: Probability = Fraction(1)
    else:
        pp = _checked("p", float(p))  # type: ignore[arg-type]
        qq = _checked("q", float(q))  # type: ignore[arg-type]
        one = 1.0

    candidates = (
        OutcomeLeaf("k1", "disaster", pp),
        OutcomeLeaf("k2", "no_disaster", (one - pp) * qq),
        OutcomeLeaf("k3", None, (one - pp) * (one - qq)),
    )
    leaves = tuple(leaf for leaf in candidates if leaf.probability != 0)
    return OutcomeTree(leaves, exact, pp, qq)


def oracle_p_reset(p: object, q: object) -> float:
    return float(enumerate_outcomes(p, q).p_reset())


def oracle_p_dis(p: object, q: object) -> float:
    return float(enumerate_outcomes(p, q).p_dis())
