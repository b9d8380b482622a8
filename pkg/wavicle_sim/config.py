"""Experiment configuration.

Resolution order: built-in defaults, then the WAVICLE_SEED environment
variable for the seed, then a flat JSON config file, then command-line
overrides.
"""

import json
import math
import os
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ConfigError
from .physics.sampler import SamplingMode
from .physics.wavicle import Statistics

SEED_ENV_VAR = "WAVICLE_SEED"
DEFAULT_SEED = 20240917

EPR_GRID_POINTS = 13
HBT_GRID_POINTS = 41
DEFAULT_THETAS = (0.0, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi)


class ExperimentKind(str, Enum):
    EPR = "epr"
    HBT = "hbt"
    SPINFLOW = "spinflow"
    NOISE = "noise"


class Geometry(str, Enum):
    SHARED = "shared"  # both sources reach both detectors
    SEPARATED = "separated"  # U reaches only A, V reaches only B


def default_epr_pairs() -> list[tuple[float, float, float, float]]:
    """gamma scan over [0, pi] in the equatorial plane."""
    return [(math.pi / 2, 0.0, math.pi / 2, float(gamma)) for gamma in np.linspace(0.0, math.pi, EPR_GRID_POINTS)]


def default_hbt_displacements() -> list[list[float]]:
    """(p - p') . R over [0, 4 pi] for the default p = (1, 0, 0), p' = 0."""
    return [[float(d), 0.0, 0.0] for d in np.linspace(0.0, 4.0 * math.pi, HBT_GRID_POINTS)]


def _default_grids(kind: str) -> dict[str, Any]:
    if kind == ExperimentKind.NOISE.value:
        return {"angle_pairs": [(math.pi / 2, 0.0, math.pi / 2, 0.0)]}
    return {"angle_pairs": default_epr_pairs()}


class ExperimentConfig(BaseModel):
    """Everything a scan needs; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ExperimentKind = ExperimentKind.EPR
    trials: int = Field(100_000, ge=1)
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    statistics: Statistics = Statistics.FERMION
    sampling_mode: SamplingMode = SamplingMode.EIGENVALUE
    workers: int = Field(4, ge=1, le=256)
    occ_u: float = Field(1.0, ge=0.0, allow_inf_nan=False)
    occ_v: float = Field(1.0, ge=0.0, allow_inf_nan=False)
    omega_u: float = Field(0.0, allow_inf_nan=False)
    omega_v: float = Field(0.0, allow_inf_nan=False)
    time_step: float = Field(0.0, ge=0.0, allow_inf_nan=False)
    geometry: Geometry = Geometry.SHARED
    angle_pairs: list[tuple[float, float, float, float]] = Field(default_factory=default_epr_pairs)
    theta_values: list[float] = Field(default_factory=lambda: list(DEFAULT_THETAS))
    p: list[float] = Field(default_factory=lambda: [1.0, 0.0, 0.0])
    p_prime: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    r_values: list[list[float]] = Field(default_factory=default_hbt_displacements)
    histogram_bins: int = Field(20, ge=2, le=10_000)

    @model_validator(mode="before")
    @classmethod
    def _kind_defaults(cls, data: Any) -> Any:
        if isinstance(data, dict):
            kind = data.get("kind", ExperimentKind.EPR.value)
            kind = kind.value if isinstance(kind, Enum) else kind
            for key, value in _default_grids(kind).items():
                data.setdefault(key, value)
        return data

    @field_validator("angle_pairs")
    @classmethod
    def _check_angles(cls, pairs):
        if not pairs:
            raise ValueError("grid must not be empty")
        for pair in pairs:
            for theta in (pair[0], pair[2]):
                if not 0.0 <= theta <= math.pi:
                    raise ValueError(f"polar angle {theta!r} outside [0, pi]")
            if not all(math.isfinite(angle) for angle in pair):
                raise ValueError("angles must be finite")
        return pairs

    @field_validator("theta_values")
    @classmethod
    def _check_thetas(cls, thetas):
        if not thetas:
            raise ValueError("grid must not be empty")
        for theta in thetas:
            if not 0.0 <= theta <= math.pi:
                raise ValueError(f"polar angle {theta!r} outside [0, pi]")
        return thetas

    @field_validator("p", "p_prime")
    @classmethod
    def _check_wavevector(cls, vector):
        if not 1 <= len(vector) <= 3:
            raise ValueError("wavevectors need 1 to 3 components")
        return vector

    @field_validator("r_values")
    @classmethod
    def _check_displacements(cls, displacements):
        if not displacements:
            raise ValueError("grid must not be empty")
        return displacements

    @model_validator(mode="after")
    def _check_hbt_dimensions(self):
        if self.kind is ExperimentKind.HBT:
            dims = {len(self.p), len(self.p_prime)} | {len(r) for r in self.r_values}
            if len(dims) != 1:
                raise ValueError(f"p, p_prime and r_values must share one dimension, got {sorted(dims)}")
        return self


def _env_seed() -> dict[str, Any]:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return {}
    try:
        return {"seed": int(raw)}
    except ValueError:
        raise ConfigError(f"not an integer: {raw!r}", key=SEED_ENV_VAR) from None


def read_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file not found", key=str(path))
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON ({e.msg} at line {e.lineno})", key=str(path)) from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object", key=str(path))
    return data


def parse_override(item: str) -> tuple[str, Any]:
    """`key=value` with value parsed as JSON, falling back to a plain string."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"expected key=value, got {item!r}", key="--set")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def load_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    kind: ExperimentKind | str | None = None,
) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig from its layers.

    Args:
        path: Optional flat JSON config file
        overrides: Command-line values, applied last
        kind: Experiment kind fixed by the subcommand, if any

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: naming the offending key
    """
    data: dict[str, Any] = _env_seed()
    if path is not None:
        data.update(read_config_file(path))
    data.update(overrides or {})
    if kind is not None:
        data["kind"] = kind.value if isinstance(kind, Enum) else kind
    try:
        return ExperimentConfig.model_validate(data)
    except pydantic.ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigError(error["msg"], key=key) from None
