"""
Closed-form reset and disaster probabilities for one branching cycle.
"""

from __future__ import annotations

import math

from typeguard import typechecked

from branchsim.exceptions import ProbabilityRangeError, UndefinedConditionalError


@typechecked
def check_probability(name: str, value: float) -> float:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ProbabilityRangeError(name, value)
    return float(value)


@typechecked
def p_reset_closed_form(p: float, q: float) -> float:
    """P_reset = p + (1 - p) q."""
    p = check_probability("p", p)
    q = check_probability("q", q)
    return p + (1.0 - p) * q


@typechecked
def p_dis_closed_form(p: float, q: float) -> float:
    """P_dis = p / (p + (1 - p) q), the disaster probability given a reset."""
    reset = p_reset_closed_form(p, q)
    if reset == 0.0:
        raise UndefinedConditionalError(p, q)
    return p / reset


@typechecked
def p_reset_limit(p: float, q: float) -> float:
    """Leading behaviour of P_reset for p << q."""
    check_probability("p", p)
    return check_probability("q", q)


@typechecked
def p_dis_limit(p: float, q: float) -> float:
    """Leading behaviour of P_dis for p << q: p / q."""
    p = check_probability("p", p)
    q = check_probability("q", q)
    if q == 0.0:
        raise UndefinedConditionalError(p, q)
    return p / q


@typechecked
def limit_relative_error(p: float, q: float) -> float:
    """|P_dis - p/q| / P_dis, which equals p (1 - q) / q exactly."""
    exact = p_dis_closed_form(p, q)
    approximation = p_dis_limit(p, q)
    if exact == 0.0:
        return 0.0 if approximation == 0.0 else math.inf
    return abs(exact - approximation) / exact
