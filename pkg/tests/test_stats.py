import math

import pytest

from branchsim.harness.stats import Proportion, wilson_interval


def test_symmetric_interval():
    low, high = wilson_interval(50, 100)
    assert low == pytest.approx(0.4038, abs=1e-4)
    assert high == pytest.approx(0.5962, abs=1e-4)


def test_extreme_counts_touch_the_bounds():
    low, high = wilson_interval(0, 100)
    assert low == 0.0
    assert 0.0 < high < 0.05
    low, high = wilson_interval(100, 100)
    assert high == 1.0
    assert 0.95 < low < 1.0


def test_higher_confidence_widens_the_interval():
    narrow = wilson_interval(30, 200, 0.9)
    wide = wilson_interval(30, 200, 0.99)
    assert wide[0] < narrow[0] and narrow[1] < wide[1]


@pytest.mark.parametrize(("successes", "trials", "confidence"), [(1, 0, 0.95), (5, 4, 0.95), (1, 4, 1.0)])
def test_invalid_arguments(successes, trials, confidence):
    with pytest.raises(ValueError):
        wilson_interval(successes, trials, confidence)


def test_proportion():
    share = Proportion(30, 100)
    assert share.estimate == 0.3
    assert share.contains(0.3)
    assert not share.contains(0.5)


def test_empty_proportion():
    share = Proportion(0, 0)
    assert math.isnan(share.estimate)
    assert not share.contains(0.5)
