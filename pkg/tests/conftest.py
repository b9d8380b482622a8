import math

import numpy as np
import pytest

from wavicle_sim.config import SEED_ENV_VAR, ExperimentConfig
from wavicle_sim.physics.algebra import SPIN_DOWN, SPIN_UP, Direction, spin_operator
from wavicle_sim.physics.sampler import DetectorModel
from wavicle_sim.physics.wavicle import SourceSpec

EQUATOR = math.pi / 2


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def spin_sources():
    return SourceSpec("up", SPIN_UP), SourceSpec("down", SPIN_DOWN)


@pytest.fixture
def spin_detector():
    def make(theta: float, phi: float = 0.0) -> DetectorModel:
        return DetectorModel.from_operator(spin_operator(Direction(theta, phi)), SPIN_UP, SPIN_DOWN)

    return make


@pytest.fixture
def small_config():
    def make(**overrides) -> ExperimentConfig:
        values = {"trials": 20_000, "workers": 2, "seed": 12345}
        values.update(overrides)
        return ExperimentConfig(**values)

    return make
