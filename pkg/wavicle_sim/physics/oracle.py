"""Closed-form detector means and correlations for two independent sources.

Every Monte Carlo run is checked against these values. A brute-force
two-particle evaluation on the symmetrised product space validates the
uncorrelated + exchange decomposition independently.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from ..errors import DimensionMismatchError, HarnessError
from .algebra import (
    SPIN_DOWN,
    SPIN_UP,
    Direction,
    HermitianOperator,
    StateVector,
    expectation,
    matrix_element,
    spectral_decompose,
    spin_operator,
)
from .sampler import DetectorModel, MixedTermTable, SamplingMode, build_mixed_table
from .wavicle import CHANNEL_ORDER, ChannelKind, SourceSpec, Statistics, enumerate_channels

IMAGINARY_TOLERANCE = 1e-14


@dataclass(frozen=True)
class TwoSourceScenario:
    source_u: SourceSpec
    source_v: SourceSpec
    op_a: HermitianOperator
    op_b: HermitianOperator
    stats: Statistics

    def __post_init__(self):
        dims = {self.source_u.state.dim, self.source_v.state.dim, self.op_a.dim, self.op_b.dim}
        if len(dims) != 1:
            raise DimensionMismatchError(f"scenario dimensions disagree: {sorted(dims)}")

    @property
    def sources(self) -> tuple[SourceSpec, SourceSpec]:
        return self.source_u, self.source_v


@dataclass(frozen=True)
class SpinScenario:
    """Polarised up and down sources read along directions a and b."""

    dir_a: Direction
    dir_b: Direction
    occ_up: float = 1.0
    occ_down: float = 1.0

    def to_two_source(self, stats: Statistics = Statistics.FERMION) -> TwoSourceScenario:
        return TwoSourceScenario(
            source_u=SourceSpec("up", SPIN_UP, self.occ_up),
            source_v=SourceSpec("down", SPIN_DOWN, self.occ_down),
            op_a=spin_operator(self.dir_a),
            op_b=spin_operator(self.dir_b),
            stats=stats,
        )


def expected_single(source: SourceSpec, op: HermitianOperator) -> float:
    """<u|A|u> F_u for a detector reached by one source only."""
    return expectation(source.state, op) * source.occupancy


def expected_two_source(source_u: SourceSpec, source_v: SourceSpec, op: HermitianOperator) -> float:
    """Independent contributions of both sources to one detector's mean."""
    return expected_single(source_u, op) + expected_single(source_v, op)


def expected_separate(scn: TwoSourceScenario) -> tuple[float, float]:
    return (
        expected_two_source(scn.source_u, scn.source_v, scn.op_a),
        expected_two_source(scn.source_u, scn.source_v, scn.op_b),
    )


def expected_joint_separated(scn: TwoSourceScenario) -> float:
    """Joint mean when U reaches only A and V reaches only B."""
    return expected_single(scn.source_u, scn.op_a) * expected_single(scn.source_v, scn.op_b)


def expected_joint_uncorr(scn: TwoSourceScenario) -> float:
    u, v = scn.source_u.state, scn.source_v.state
    direct = expectation(u, scn.op_a) * expectation(v, scn.op_b)
    swapped = expectation(v, scn.op_a) * expectation(u, scn.op_b)
    return (direct + swapped) * scn.source_u.occupancy * scn.source_v.occupancy


def _exchange_bracket(scn: TwoSourceScenario) -> float:
    u, v = scn.source_u.state, scn.source_v.state
    bracket = (
        matrix_element(u, scn.op_a, v) * matrix_element(v, scn.op_b, u)
        + matrix_element(u, scn.op_b, v) * matrix_element(v, scn.op_a, u)
    )
    if abs(bracket.imag) > IMAGINARY_TOLERANCE * max(1.0, abs(bracket.real)):
        raise HarnessError(f"exchange term has imaginary part {bracket.imag:.3e}")
    return bracket.real


def expected_joint_corr(scn: TwoSourceScenario) -> float:
    """Exchange contribution, positive for bosons and negative for fermions."""
    return scn.stats.sign * _exchange_bracket(scn) * scn.source_u.occupancy * scn.source_v.occupancy


def expected_joint_total(scn: TwoSourceScenario) -> float:
    return expected_joint_uncorr(scn) + expected_joint_corr(scn)


def brute_force_joint(scn: TwoSourceScenario) -> float:
    """<Psi|A (x) B|Psi> F_u F_v with Psi = u(x)v +/- v(x)u left unnormalised."""
    u = scn.source_u.state.components
    v = scn.source_v.state.components
    psi = np.kron(u, v) + scn.stats.sign * np.kron(v, u)
    product_op = np.kron(scn.op_a.entries, scn.op_b.entries)
    value = np.vdot(psi, product_op @ psi)
    return float(value.real) * scn.source_u.occupancy * scn.source_v.occupancy


def spin_cos_gamma(dir_a: Direction, dir_b: Direction) -> float:
    return (
        math.cos(dir_a.theta) * math.cos(dir_b.theta)
        + math.cos(dir_a.phi - dir_b.phi) * math.sin(dir_a.theta) * math.sin(dir_b.theta)
    )


def spin_gamma(dir_a: Direction, dir_b: Direction) -> float:
    """Angle between the two measurement directions."""
    return math.acos(max(-1.0, min(1.0, spin_cos_gamma(dir_a, dir_b))))


def hbt_correlation(p, p_prime, R, f_p: float, f_p_prime: float, stats: Statistics) -> float:
    """Intensity correlation [1 +/- cos((p - p') . R)] 2 F_p F_p'."""
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    p_prime = np.atleast_1d(np.asarray(p_prime, dtype=np.float64))
    R = np.atleast_1d(np.asarray(R, dtype=np.float64))
    if not (p.shape == p_prime.shape == R.shape) or p.shape[0] not in (1, 2, 3):
        raise DimensionMismatchError(
            f"p, p' and R must share 1..3 components, got {p.shape}, {p_prime.shape}, {R.shape}"
        )
    return hbt_correlation_at(float(np.dot(p - p_prime, R)), f_p, f_p_prime, stats)


def hbt_correlation_at(phase: float, f_p: float, f_p_prime: float, stats: Statistics) -> float:
    """Same law written in terms of (p - p') . R."""
    return (1.0 + stats.sign * math.cos(phase)) * 2.0 * f_p * f_p_prime


@dataclass(frozen=True)
class MixTargets:
    """Expected Monte Carlo means for a given channel mix."""

    mean_a: float
    mean_b: float
    mean_ab: float
    uncorrelated: float
    correlated: float


def expected_channel_contributions(
    sources: tuple[SourceSpec, SourceSpec],
    det_a: DetectorModel,
    det_b: DetectorModel,
    stats: Statistics,
) -> dict[ChannelKind, tuple[float, float, float]]:
    """Weighted (a, b, ab) means each channel adds to the estimator targets."""
    contributions = {}
    for channel in enumerate_channels(sources, stats):
        kind = channel.kind
        if kind is ChannelKind.DIAG_UV:
            mean_a, mean_b = det_a.pure_u.mean, det_b.pure_v.mean
            product = mean_a * mean_b
        elif kind is ChannelKind.DIAG_VU:
            mean_a, mean_b = det_a.pure_v.mean, det_b.pure_u.mean
            product = mean_a * mean_b
        elif kind is ChannelKind.EXCH_UV:
            mean_a = mean_b = 0.0
            product = (det_a.mixed_uv.element * det_b.mixed_vu.element).real
        else:
            mean_a = mean_b = 0.0
            product = (det_a.mixed_vu.element * det_b.mixed_uv.element).real
        contributions[kind] = (channel.weight_a * mean_a, channel.weight_b * mean_b, channel.weight * product)
    return contributions


def expected_mix_targets(
    sources: tuple[SourceSpec, SourceSpec],
    det_a: DetectorModel,
    det_b: DetectorModel,
    stats: Statistics,
    channel_mix,
) -> MixTargets:
    """Targets of the importance-weighted estimator when only channels with p > 0 are drawn."""
    contributions = expected_channel_contributions(sources, det_a, det_b, stats)
    included = [kind for kind, probability in zip(CHANNEL_ORDER, channel_mix) if probability > 0.0]
    uncorrelated = math.fsum(contributions[kind][2] for kind in included if not kind.is_exchange)
    correlated = math.fsum(contributions[kind][2] for kind in included if kind.is_exchange)
    return MixTargets(
        mean_a=math.fsum(contributions[kind][0] for kind in included),
        mean_b=math.fsum(contributions[kind][1] for kind in included),
        mean_ab=uncorrelated + correlated,
        uncorrelated=uncorrelated,
        correlated=correlated,
    )


def _singlet() -> np.ndarray:
    up = SPIN_UP.components
    down = SPIN_DOWN.components
    return np.kron(up, down) - np.kron(down, up)


def singlet_expectation(dir_a: Direction, dir_b: Direction) -> float:
    """<Psi|A (x) B|Psi> for the unnormalised singlet (norm^2 = 2)."""
    psi = _singlet()
    op = np.kron(spin_operator(dir_a).entries, spin_operator(dir_b).entries)
    return float(np.vdot(psi, op @ psi).real)


def singlet_single(direction: Direction, site: str = "a") -> float:
    """<Psi|A|Psi> with A acting on one site only."""
    psi = _singlet()
    spin = spin_operator(direction).entries
    identity = np.eye(2)
    op = np.kron(spin, identity) if site == "a" else np.kron(identity, spin)
    return float(np.vdot(psi, op @ psi).real)


def spin_flow_mean(theta: float, f_up: float, f_down: float) -> float:
    """Mean reading cos(theta) (F_up - F_down) of a detector at polar angle theta."""
    return math.cos(theta) * (f_up - f_down)


def spin_flow_plus_probability(theta: float) -> float:
    """Probability of +1 for a spin-up particle measured at polar angle theta."""
    return math.cos(theta / 2.0) ** 2


def mixed_noise_variance_from_table(table: MixedTermTable, mode: SamplingMode) -> float:
    if mode is SamplingMode.EXPECTATION:
        return 0.5 * abs(table.element) ** 2
    return 0.5 * table.normalization * float(np.sum(table.magnitudes * table.eigenvalues**2))


def mixed_noise_variance(
    u: StateVector,
    v: StateVector,
    op: HermitianOperator,
    mode: SamplingMode = SamplingMode.EIGENVALUE,
) -> float:
    """Phase-averaged variance of one unscaled exchange reading.

    The phase-averaged mean is zero, so this is the second moment.
    """
    return mixed_noise_variance_from_table(build_mixed_table(u, v, spectral_decompose(op)), mode)


def mixed_reading_cdf(table: MixedTermTable, mode: SamplingMode = SamplingMode.EIGENVALUE):
    """CDF of one unscaled exchange reading under a uniformly random phase.

    A cosine of a uniform phase scaled by r follows the arcsine law on
    [-r, r]; eigenvalue sampling mixes one such law per term.
    """
    if mode is SamplingMode.EXPECTATION or table.normalization == 0.0:
        radii = np.array([abs(table.element)])
        weights = np.array([1.0])
    else:
        radii = table.normalization * np.abs(table.eigenvalues)
        weights = table.probabilities

    def cdf(x):
        x = np.asarray(x, dtype=np.float64)
        total = np.zeros_like(x)
        for radius, weight in zip(radii, weights):
            if weight == 0.0:
                continue
            if radius == 0.0:
                total += weight * (x >= 0.0)
            else:
                total += weight * scipy.stats.arcsine.cdf(x, loc=-radius, scale=2.0 * radius)
        return total

    return cdf
