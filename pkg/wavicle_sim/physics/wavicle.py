"""Wavicle event model.

Each source emits bra+ket pairs carrying a random initial phase of opposite
signs. A detector pair either receives both halves of a wavicle from one
source (diagonal channels) or receives a bra from one source and a ket from
the other (exchange channels), which carry the shared phase difference.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ValidationError
from ..utils.rng import RngStream
from .algebra import StateVector

TWO_PI = 2.0 * math.pi


class Statistics(Enum):
    """Exchange statistics of the emitted particles."""

    BOSON = "boson"
    FERMION = "fermion"

    @property
    def sign(self) -> int:
        return 1 if self is Statistics.BOSON else -1


class ChannelKind(Enum):
    """Which source supplies the bra and the ket at each detector."""

    DIAG_UV = "diag_uv"  # A reads u, B reads v
    DIAG_VU = "diag_vu"  # A reads v, B reads u
    EXCH_UV = "exch_uv"  # A reads bra-u/ket-v, B reads bra-v/ket-u
    EXCH_VU = "exch_vu"  # A reads bra-v/ket-u, B reads bra-u/ket-v

    @property
    def is_exchange(self) -> bool:
        return self in (ChannelKind.EXCH_UV, ChannelKind.EXCH_VU)

    @property
    def index(self) -> int:
        return CHANNEL_ORDER.index(self)

    def swapped(self) -> "ChannelKind":
        """Counterpart under u <-> v relabeling."""
        return _SWAPPED[self]


CHANNEL_ORDER = (ChannelKind.DIAG_UV, ChannelKind.DIAG_VU, ChannelKind.EXCH_UV, ChannelKind.EXCH_VU)
_SWAPPED = {
    ChannelKind.DIAG_UV: ChannelKind.DIAG_VU,
    ChannelKind.DIAG_VU: ChannelKind.DIAG_UV,
    ChannelKind.EXCH_UV: ChannelKind.EXCH_VU,
    ChannelKind.EXCH_VU: ChannelKind.EXCH_UV,
}


@dataclass(frozen=True)
class SourceSpec:
    """A source emitting particles in `state` with occupancy F and frequency omega.

    `state` is None for plane-wave sources, whose detector tables are
    built in closed form.
    """

    label: str
    state: StateVector | None
    occupancy: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.occupancy) and self.occupancy >= 0.0):
            raise ValidationError(f"occupancy of source {self.label!r} must be >= 0, got {self.occupancy!r}")
        if not math.isfinite(self.omega):
            raise ValidationError(f"omega of source {self.label!r} must be finite")


@dataclass(frozen=True)
class EmissionEvent:
    """Initial phases of one emission from each source."""

    phase_u: float
    phase_v: float
    time: float
    trial_id: int


@dataclass(frozen=True)
class EventBatch:
    """Vectorised emission events for a contiguous block of trials."""

    phase_u: np.ndarray
    phase_v: np.ndarray
    time: np.ndarray
    trial_id: np.ndarray

    def __len__(self) -> int:
        return self.trial_id.shape[0]


@dataclass(frozen=True)
class Channel:
    """One detector pairing with its signed joint weight.

    `weight_a` and `weight_b` weight each detector's reading when the
    detectors are averaged separately.
    """

    kind: ChannelKind
    weight: float
    weight_a: float
    weight_b: float


def draw_event_batch(
    rng: np.random.Generator,
    first_trial_id: int,
    size: int,
    time_step: float = 0.0,
) -> EventBatch:
    """Draw `size` events with independent uniform phases on [0, 2 pi)."""
    phase_u = rng.random(size) * TWO_PI
    phase_v = rng.random(size) * TWO_PI
    # rounding of u * 2pi can land exactly on 2pi
    phase_u[phase_u >= TWO_PI] = 0.0
    phase_v[phase_v >= TWO_PI] = 0.0
    trial_id = np.arange(first_trial_id, first_trial_id + size, dtype=np.int64)
    time = trial_id.astype(np.float64) * time_step
    return EventBatch(phase_u=phase_u, phase_v=phase_v, time=time, trial_id=trial_id)


def draw_event(
    stream: RngStream,
    sources: tuple[SourceSpec, SourceSpec],
    time: float = 0.0,
) -> EmissionEvent:
    """Draw one event; the stream counter doubles as the trial id."""
    batch = draw_event_batch(stream.generator(), stream.counter, 1)
    return EmissionEvent(
        phase_u=float(batch.phase_u[0]),
        phase_v=float(batch.phase_v[0]),
        time=float(time),
        trial_id=stream.counter,
    )


def wrap_phase(phase):
    """Reduce to (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(phase, dtype=np.float64), TWO_PI)


def phase_difference(event: EmissionEvent | EventBatch, sources: tuple[SourceSpec, SourceSpec]):
    """Exchange-channel phase (omega_u - omega_v) t - (phi_u - phi_v) in (-pi, pi].

    Exch_uv carries +phi and Exch_vu carries -phi.
    """
    source_u, source_v = sources
    raw = (source_u.omega - source_v.omega) * np.asarray(event.time) - (
        np.asarray(event.phase_u) - np.asarray(event.phase_v)
    )
    wrapped = wrap_phase(raw)
    if isinstance(event, EmissionEvent):
        return float(wrapped)
    return wrapped


def enumerate_channels(sources: tuple[SourceSpec, SourceSpec], stats: Statistics) -> list[Channel]:
    """The four pairings in CHANNEL_ORDER with raw (unnormalised) weights."""
    source_u, source_v = sources
    f_u = source_u.occupancy
    f_v = source_v.occupancy
    product = f_u * f_v
    mixed = math.sqrt(product)
    return [
        Channel(ChannelKind.DIAG_UV, product, f_u, f_v),
        Channel(ChannelKind.DIAG_VU, product, f_v, f_u),
        Channel(ChannelKind.EXCH_UV, stats.sign * product, mixed, mixed),
        Channel(ChannelKind.EXCH_VU, stats.sign * product, mixed, mixed),
    ]


def choose_channels(rng: np.random.Generator, size: int, probabilities) -> np.ndarray:
    """Channel index per trial (positions in CHANNEL_ORDER)."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    cumulative = np.cumsum(probabilities / probabilities.sum())
    # last reachable channel closes at exactly 1 so zero-probability tails are never drawn
    cumulative[np.flatnonzero(probabilities)[-1]:] = 1.0
    uniforms = rng.random(size)
    indices = np.searchsorted(cumulative, uniforms, side="right")
    return np.minimum(indices, len(CHANNEL_ORDER) - 1).astype(np.int8)
