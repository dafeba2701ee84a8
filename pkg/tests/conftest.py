import numpy as np
import pytest

from branchsim.core import Register, SpaceLayout, StateVector


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261017)


@pytest.fixture
def qubit_pair() -> SpaceLayout:
    return SpaceLayout.of(Register("observer", 2, "observer"), Register("system", 2))


@pytest.fixture
def random_state(rng):
    def build(layout: SpaceLayout) -> StateVector:
        noise = rng.normal(size=(2, layout.total_dim))
        amps = noise[0] + 1j * noise[1]
        return StateVector(layout, amps / np.linalg.norm(amps))

    return build


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    for name in ("BRANCHSIM_SEED", "BRANCHSIM_OUTPUT_DIR", "BRANCHSIM_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
