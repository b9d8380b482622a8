"""Linear algebra, event model, sampler, estimator and closed-form oracle."""

from .algebra import Direction, HermitianOperator, StateVector, spectral_decompose, spin_operator
from .estimator import Accumulator, joint_average, separate_average
from .sampler import EXCHANGE_KAPPA, DetectorModel, SamplingMode
from .wavicle import ChannelKind, SourceSpec, Statistics

__all__ = [
    "Accumulator",
    "ChannelKind",
    "DetectorModel",
    "Direction",
    "EXCHANGE_KAPPA",
    "HermitianOperator",
    "SamplingMode",
    "SourceSpec",
    "StateVector",
    "Statistics",
    "joint_average",
    "separate_average",
    "spectral_decompose",
    "spin_operator",
]
