import csv
from pathlib import Path

import numpy as np
import pytest
from typeguard import TypeCheckError

from branchsim.harness.seeding import MASK64, derive_trial_seed, trial_rng

VECTORS = Path(__file__).parent / "data" / "trial_seed_vectors.csv"


def golden_rows() -> list[tuple[int, int, int]]:
    with VECTORS.open(newline="") as handle:
        return [(int(r["master"]), int(r["index"]), int(r["seed"])) for r in csv.DictReader(handle)]


@pytest.mark.parametrize(("master", "index", "seed"), golden_rows())
def test_golden_vectors(master, index, seed):
    assert derive_trial_seed(master, index) == seed


def test_seeds_are_unsigned_64_bit():
    for index in range(1000):
        assert 0 <= derive_trial_seed(MASK64, index) <= MASK64


def test_no_collisions_across_a_run():
    seeds = {derive_trial_seed(20261017, index) for index in range(100_000)}
    assert len(seeds) == 100_000


def test_streams_are_reproducible_and_distinct():
    a = trial_rng(7, 3).random(8)
    assert np.array_equal(a, trial_rng(7, 3).random(8))
    assert not np.array_equal(a, trial_rng(7, 4).random(8))
    assert not np.array_equal(a, trial_rng(8, 3).random(8))


@pytest.mark.parametrize(("master", "index"), [(-1, 0), (1 << 64, 0), (0, -1)])
def test_out_of_range_inputs(master, index):
    with pytest.raises(ValueError):
        derive_trial_seed(master, index)


def test_non_integer_seed():
    with pytest.raises(TypeCheckError):
        derive_trial_seed(1.5, 0)  # type: ignore[arg-type]
