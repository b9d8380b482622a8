"""Per-event detector readings.

Diagonal channels return eigenvalues A_j drawn with w_j = |c_j|^2.
Exchange channels return phase-modulated readings built from the mixed
term table m_j e^{i alpha_j} = c_j*(u) c_j(v): either a sampled
N A_j cos(alpha_j + phase) or the deterministic Re[e^{i phase} <u|A|v>].
Exchange readings are scaled by EXCHANGE_KAPPA so that the phase-averaged
product of two readings reproduces the ensemble exchange term.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..utils.rng import RngStream
from .algebra import (
    HermitianOperator,
    SpectralDecomposition,
    StateVector,
    overlap_coefficients,
    spectral_decompose,
)
from .wavicle import CHANNEL_ORDER, ChannelKind, Channel, EmissionEvent, SourceSpec, phase_difference

# phase averaging of cos(x + phi) cos(y - phi) contributes 1/2; kappa^2 = 2 undoes it
EXCHANGE_KAPPA = math.sqrt(2.0)


class SamplingMode(Enum):
    EIGENVALUE = "eigenvalue"
    EXPECTATION = "expectation"


class Detector(Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class DetectorReading:
    detector: Detector
    value: float
    channel: ChannelKind
    trial_id: int


def _cumulative(probabilities: np.ndarray) -> np.ndarray:
    total = probabilities.sum()
    if total <= 0.0:
        return np.ones_like(probabilities)
    cumulative = np.cumsum(probabilities / total)
    cumulative[np.flatnonzero(probabilities)[-1]:] = 1.0
    return cumulative


def _draw_index(cumulative: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    indices = np.searchsorted(cumulative, uniforms, side="right")
    return np.minimum(indices, cumulative.shape[0] - 1)


@dataclass(frozen=True)
class PureTermTable:
    """Eigenvalues A_j and probabilities w_j for one (state, observable) pair."""

    eigenvalues: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_state(cls, state: StateVector, decomp: SpectralDecomposition) -> "PureTermTable":
        weights = np.abs(overlap_coefficients(state, decomp)) ** 2
        return cls(eigenvalues=np.asarray(decomp.eigenvalues, dtype=np.float64), weights=weights)

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.eigenvalues))

    def sample(self, uniforms: np.ndarray) -> np.ndarray:
        return self.eigenvalues[_draw_index(_cumulative(self.weights), uniforms)]


@dataclass(frozen=True)
class MixedTermTable:
    """Magnitudes m_j, phases alpha_j and eigenvalues A_j of a bra/ket-mixed reading."""

    magnitudes: np.ndarray
    alphas: np.ndarray
    eigenvalues: np.ndarray

    @classmethod
    def single_term(cls, alpha: float, eigenvalue: float = 1.0, magnitude: float = 1.0) -> "MixedTermTable":
        return cls(
            magnitudes=np.array([magnitude]),
            alphas=np.array([alpha]),
            eigenvalues=np.array([eigenvalue]),
        )

    @property
    def normalization(self) -> float:
        return float(self.magnitudes.sum())

    @property
    def probabilities(self) -> np.ndarray:
        n = self.normalization
        if n == 0.0:
            return np.zeros_like(self.magnitudes)
        return self.magnitudes / n

    @property
    def element(self) -> complex:
        """Sum_j m_j A_j e^{i alpha_j}, i.e. <u|A|v>."""
        return complex(np.sum(self.magnitudes * self.eigenvalues * np.exp(1j * self.alphas)))

    def expectation(self, phase):
        """Re[e^{i phase} <u|A|v>] = Sum_j m_j A_j cos(alpha_j + phase)."""
        return np.real(np.exp(1j * np.asarray(phase)) * self.element)

    def conjugate(self) -> "MixedTermTable":
        """Table for the swapped pair (bra-v, ket-u)."""
        return MixedTermTable(magnitudes=self.magnitudes, alphas=-self.alphas, eigenvalues=self.eigenvalues)


def build_mixed_table(u: StateVector, v: StateVector, decomp: SpectralDecomposition) -> MixedTermTable:
    products = np.conj(overlap_coefficients(u, decomp)) * overlap_coefficients(v, decomp)
    magnitudes = np.abs(products)
    alphas = np.where(magnitudes > 0.0, np.angle(products), 0.0)
    return MixedTermTable(
        magnitudes=magnitudes,
        alphas=alphas,
        eigenvalues=np.asarray(decomp.eigenvalues, dtype=np.float64),
    )


def mixed_values(table: MixedTermTable, phases: np.ndarray, uniforms: np.ndarray, mode: SamplingMode) -> np.ndarray:
    """Unscaled exchange readings for a vector of phases."""
    phases = np.asarray(phases, dtype=np.float64)
    norm = table.normalization
    if norm == 0.0:
        return np.zeros_like(phases)
    if mode is SamplingMode.EXPECTATION:
        return table.expectation(phases)
    index = _draw_index(_cumulative(table.magnitudes), uniforms)
    return norm * table.eigenvalues[index] * np.cos(table.alphas[index] + phases)


@dataclass(frozen=True)
class DetectorModel:
    """Everything one detector needs to produce readings for both sources."""

    pure_u: PureTermTable
    pure_v: PureTermTable
    mixed_uv: MixedTermTable
    mixed_vu: MixedTermTable
    operator: HermitianOperator | None = None
    decomposition: SpectralDecomposition | None = None

    @classmethod
    def from_operator(
        cls,
        op: HermitianOperator,
        u: StateVector,
        v: StateVector,
        decomp: SpectralDecomposition | None = None,
    ) -> "DetectorModel":
        decomp = decomp or spectral_decompose(op)
        mixed = build_mixed_table(u, v, decomp)
        return cls(
            pure_u=PureTermTable.from_state(u, decomp),
            pure_v=PureTermTable.from_state(v, decomp),
            mixed_uv=mixed,
            mixed_vu=mixed.conjugate(),
            operator=op,
            decomposition=decomp,
        )

    @classmethod
    def plane_wave(cls, p, p_prime, position) -> "DetectorModel":
        """Intensity detector at `position` for plane waves u=p, v=p'.

        Pure readings are fixed at 1; <u|A|v> = e^{-i (p - p') . r}.
        """
        p = np.asarray(p, dtype=np.float64)
        p_prime = np.asarray(p_prime, dtype=np.float64)
        position = np.asarray(position, dtype=np.float64)
        unit = PureTermTable(eigenvalues=np.array([1.0]), weights=np.array([1.0]))
        mixed = MixedTermTable.single_term(alpha=-float(np.dot(p - p_prime, position)))
        return cls(pure_u=unit, pure_v=unit, mixed_uv=mixed, mixed_vu=mixed.conjugate())


def plane_wave_detector(p, p_prime, position) -> DetectorModel:
    return DetectorModel.plane_wave(p, p_prime, position)


def sample_pure_reading(stream: RngStream, state: StateVector, decomp: SpectralDecomposition) -> float:
    """One eigenvalue A_j drawn with probability |<f_j|state>|^2."""
    table = PureTermTable.from_state(state, decomp)
    return float(table.sample(stream.generator().random(1))[0])


def sample_mixed_reading(
    stream: RngStream,
    table: MixedTermTable,
    phase: float,
    mode: SamplingMode = SamplingMode.EIGENVALUE,
) -> float:
    """One unscaled exchange reading at a fixed phase."""
    uniforms = stream.generator().random(1)
    return float(mixed_values(table, np.array([phase]), uniforms, mode)[0])


def sample_batch(
    rng: np.random.Generator,
    kinds: np.ndarray,
    phases: np.ndarray,
    det_a: DetectorModel,
    det_b: DetectorModel,
    mode: SamplingMode = SamplingMode.EIGENVALUE,
    kappa: float = EXCHANGE_KAPPA,
) -> tuple[np.ndarray, np.ndarray]:
    """Readings of both detectors for a block of trials.

    `kinds` holds channel positions in CHANNEL_ORDER. Uniforms for both
    detectors are drawn up front so the stream consumption does not depend
    on the channel mix.
    """
    size = kinds.shape[0]
    uniforms_a = rng.random(size)
    uniforms_b = rng.random(size)
    a = np.zeros(size)
    b = np.zeros(size)

    diag_uv = kinds == ChannelKind.DIAG_UV.index
    a[diag_uv] = det_a.pure_u.sample(uniforms_a[diag_uv])
    b[diag_uv] = det_b.pure_v.sample(uniforms_b[diag_uv])

    diag_vu = kinds == ChannelKind.DIAG_VU.index
    a[diag_vu] = det_a.pure_v.sample(uniforms_a[diag_vu])
    b[diag_vu] = det_b.pure_u.sample(uniforms_b[diag_vu])

    exch_uv = kinds == ChannelKind.EXCH_UV.index
    phi = phases[exch_uv]
    a[exch_uv] = kappa * mixed_values(det_a.mixed_uv, phi, uniforms_a[exch_uv], mode)
    b[exch_uv] = kappa * mixed_values(det_b.mixed_vu, -phi, uniforms_b[exch_uv], mode)

    exch_vu = kinds == ChannelKind.EXCH_VU.index
    phi = phases[exch_vu]
    a[exch_vu] = kappa * mixed_values(det_a.mixed_vu, -phi, uniforms_a[exch_vu], mode)
    b[exch_vu] = kappa * mixed_values(det_b.mixed_uv, phi, uniforms_b[exch_vu], mode)

    return a, b


def sample_event_readings(
    stream: RngStream,
    event: EmissionEvent,
    channel: Channel,
    det_a: DetectorModel,
    det_b: DetectorModel,
    sources: tuple[SourceSpec, SourceSpec],
    mode: SamplingMode = SamplingMode.EIGENVALUE,
    kappa: float = EXCHANGE_KAPPA,
) -> tuple[DetectorReading, DetectorReading]:
    """Readings of both detectors for one event routed through one channel."""
    phase = phase_difference(event, sources)
    kinds = np.array([CHANNEL_ORDER.index(channel.kind)], dtype=np.int8)
    a, b = sample_batch(stream.generator(), kinds, np.array([phase]), det_a, det_b, mode, kappa)
    return (
        DetectorReading(Detector.A, float(a[0]), channel.kind, event.trial_id),
        DetectorReading(Detector.B, float(b[0]), channel.kind, event.trial_id),
    )
