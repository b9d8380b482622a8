"""Streaming, mergeable accumulators for separate and joint detector averages.

Every trial contributes one weighted reading pair routed through one
channel. Means are signed-weight sums divided by the total trial count, so
the diagonal channels add up to the uncorrelated part and the exchange
channels to the correlated part of the joint mean.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import HarnessError, InsufficientDataError, ScenarioMismatchError
from .sampler import DetectorReading
from .wavicle import CHANNEL_ORDER, ChannelKind


class CompensatedSum:
    """Neumaier-compensated running sum."""

    __slots__ = ("high", "low")

    def __init__(self, high: float = 0.0, low: float = 0.0):
        self.high = high
        self.low = low

    def add(self, value: float) -> None:
        total = self.high + value
        if abs(self.high) >= abs(value):
            self.low += (self.high - total) + value
        else:
            self.low += (value - total) + self.high
        self.high = total

    def add_array(self, values: np.ndarray) -> None:
        if values.size:
            self.add(math.fsum(values.tolist()))

    def merged(self, other: "CompensatedSum") -> "CompensatedSum":
        result = CompensatedSum(self.high, self.low + other.low)
        result.add(other.high)
        return result

    @property
    def value(self) -> float:
        return self.high + self.low

    def __repr__(self):
        return f"CompensatedSum({self.value!r})"


_MOMENT_FIELDS = ("weight", "sum_a", "sum_b", "sum_ab", "sum_a2", "sum_b2", "sum_ab2")


@dataclass
class Moments:
    """Weighted first and second moments of one channel's readings."""

    n: int = 0
    weight: CompensatedSum = field(default_factory=CompensatedSum)
    sum_a: CompensatedSum = field(default_factory=CompensatedSum)
    sum_b: CompensatedSum = field(default_factory=CompensatedSum)
    sum_ab: CompensatedSum = field(default_factory=CompensatedSum)
    sum_a2: CompensatedSum = field(default_factory=CompensatedSum)
    sum_b2: CompensatedSum = field(default_factory=CompensatedSum)
    sum_ab2: CompensatedSum = field(default_factory=CompensatedSum)

    def merged(self, other: "Moments") -> "Moments":
        result = Moments(n=self.n + other.n)
        for name in _MOMENT_FIELDS:
            setattr(result, name, getattr(self, name).merged(getattr(other, name)))
        return result


class Estimate(NamedTuple):
    value: float
    stderr: float


@dataclass(frozen=True)
class CorrelationEstimate:
    mean_a: Estimate
    mean_b: Estimate
    mean_ab: Estimate
    uncorrelated_part: Estimate
    correlated_part: Estimate


def _fresh_channels() -> dict[ChannelKind, Moments]:
    return {kind: Moments() for kind in CHANNEL_ORDER}


@dataclass
class Accumulator:
    """Per-channel moments. Single writer; combine across workers with merge()."""

    scenario: str | None = None
    channels: dict[ChannelKind, Moments] = field(default_factory=_fresh_channels)

    @property
    def n(self) -> int:
        return sum(moments.n for moments in self.channels.values())

    def accumulate(
        self,
        a: DetectorReading,
        b: DetectorReading,
        weight: float,
        weight_a: float = 1.0,
        weight_b: float = 1.0,
    ) -> "Accumulator":
        """Add one reading pair with a signed joint weight."""
        if a.trial_id != b.trial_id:
            raise HarnessError(f"readings from different trials: {a.trial_id} != {b.trial_id}")
        if a.channel is not b.channel:
            raise HarnessError(f"readings from different channels: {a.channel.value} != {b.channel.value}")
        moments = self.channels[a.channel]
        wa = weight_a * a.value
        wb = weight_b * b.value
        wab = weight * a.value * b.value
        moments.n += 1
        moments.weight.add(weight)
        moments.sum_a.add(wa)
        moments.sum_b.add(wb)
        moments.sum_ab.add(wab)
        moments.sum_a2.add(wa * wa)
        moments.sum_b2.add(wb * wb)
        moments.sum_ab2.add(wab * wab)
        return self

    def accumulate_batch(
        self,
        kind: ChannelKind,
        a: np.ndarray,
        b: np.ndarray,
        weight: float,
        weight_a: float = 1.0,
        weight_b: float = 1.0,
    ) -> "Accumulator":
        """Add a block of reading pairs that all went through `kind`."""
        if a.shape != b.shape:
            raise HarnessError(f"reading blocks differ in shape: {a.shape} != {b.shape}")
        moments = self.channels[kind]
        wa = weight_a * a
        wb = weight_b * b
        wab = weight * a * b
        moments.n += int(a.shape[0])
        moments.weight.add(weight * a.shape[0])
        moments.sum_a.add_array(wa)
        moments.sum_b.add_array(wb)
        moments.sum_ab.add_array(wab)
        moments.sum_a2.add_array(wa * wa)
        moments.sum_b2.add_array(wb * wb)
        moments.sum_ab2.add_array(wab * wab)
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        if self.scenario is not None and other.scenario is not None and self.scenario != other.scenario:
            raise ScenarioMismatchError(f"cannot merge {self.scenario!r} with {other.scenario!r}")
        return Accumulator(
            scenario=self.scenario if self.scenario is not None else other.scenario,
            channels={kind: self.channels[kind].merged(other.channels[kind]) for kind in CHANNEL_ORDER},
        )

    def _estimate(self, kinds, first: str, second: str) -> Estimate:
        n = self.n
        total = math.fsum(getattr(self.channels[kind], first).value for kind in kinds)
        squares = math.fsum(getattr(self.channels[kind], second).value for kind in kinds)
        mean = total / n
        variance = max(squares - total * total / n, 0.0) / (n - 1)
        return Estimate(mean, math.sqrt(variance / n))

    def _require(self, minimum: int = 2) -> None:
        if self.n < minimum:
            raise InsufficientDataError(f"need at least {minimum} trials, have {self.n}")


def accumulate(
    acc: Accumulator,
    a: DetectorReading,
    b: DetectorReading,
    weight: float,
    weight_a: float = 1.0,
    weight_b: float = 1.0,
) -> Accumulator:
    return acc.accumulate(a, b, weight, weight_a, weight_b)


def merge(acc1: Accumulator, acc2: Accumulator) -> Accumulator:
    return acc1.merge(acc2)


def separate_average(acc: Accumulator) -> tuple[Estimate, Estimate]:
    """Each detector averaged on its own record."""
    acc._require()
    return (
        acc._estimate(CHANNEL_ORDER, "sum_a", "sum_a2"),
        acc._estimate(CHANNEL_ORDER, "sum_b", "sum_b2"),
    )


DIAGONAL_KINDS = tuple(kind for kind in CHANNEL_ORDER if not kind.is_exchange)
EXCHANGE_KINDS = tuple(kind for kind in CHANNEL_ORDER if kind.is_exchange)


def joint_average(acc: Accumulator) -> CorrelationEstimate:
    """Product average with its split into uncorrelated and correlated parts."""
    mean_a, mean_b = separate_average(acc)
    return CorrelationEstimate(
        mean_a=mean_a,
        mean_b=mean_b,
        mean_ab=acc._estimate(CHANNEL_ORDER, "sum_ab", "sum_ab2"),
        uncorrelated_part=acc._estimate(DIAGONAL_KINDS, "sum_ab", "sum_ab2"),
        correlated_part=acc._estimate(EXCHANGE_KINDS, "sum_ab", "sum_ab2"),
    )
