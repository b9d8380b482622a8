"""Built-in health checks: analytic identities plus a short Monte Carlo smoke run."""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import DEFAULT_SEED, ExperimentConfig, ExperimentKind
from .errors import WavicleError
from .experiments import run_epr_scan, run_hbt_scan
from .physics import oracle
from .physics.algebra import Direction, HermitianOperator, StateVector, matrix_element, spectral_decompose
from .physics.sampler import EXCHANGE_KAPPA, build_mixed_table
from .physics.wavicle import SourceSpec, Statistics
from .utils.rng import RngStream

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-12
SMOKE_TRIALS = 10_000
SMOKE_Z_LIMIT = 5.0
RANDOM_CASES = 100

# stream ids far above any scan grid index
_IDENTITY_STREAM = 1 << 32


@dataclass(frozen=True)
class GateResult:
    name: str
    passed: bool
    statistic: float
    detail: str


def _random_direction(rng: np.random.Generator) -> Direction:
    return Direction(math.acos(rng.uniform(-1.0, 1.0)), rng.uniform(0.0, 2.0 * math.pi))


def _random_state(rng: np.random.Generator, dim: int) -> StateVector:
    return StateVector.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def _random_hermitian(rng: np.random.Generator, dim: int) -> HermitianOperator:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator((m + m.conj().T) / 2.0)


def _identity_gate(name: str, deviations: list[float], tolerance: float = IDENTITY_TOLERANCE) -> GateResult:
    worst = max(deviations)
    return GateResult(name, worst <= tolerance, worst, f"max deviation {worst:.3e} over {len(deviations)} cases")


def singlet_equivalence(rng: np.random.Generator) -> GateResult:
    deviations = []
    for _ in range(RANDOM_CASES):
        dir_a, dir_b = _random_direction(rng), _random_direction(rng)
        scenario = oracle.SpinScenario(dir_a, dir_b).to_two_source(Statistics.FERMION)
        deviations.append(abs(oracle.singlet_expectation(dir_a, dir_b) - oracle.expected_joint_total(scenario)))
    return _identity_gate("singlet-equivalence", deviations)


def brute_force_equivalence(rng: np.random.Generator) -> GateResult:
    deviations = []
    for case in range(RANDOM_CASES):
        stats = Statistics.BOSON if case % 2 else Statistics.FERMION
        scenario = oracle.TwoSourceScenario(
            source_u=SourceSpec("u", _random_state(rng, 2), float(rng.uniform(0.1, 2.0))),
            source_v=SourceSpec("v", _random_state(rng, 2), float(rng.uniform(0.1, 2.0))),
            op_a=_random_hermitian(rng, 2),
            op_b=_random_hermitian(rng, 2),
            stats=stats,
        )
        expected = oracle.brute_force_joint(scenario)
        deviations.append(abs(expected - oracle.expected_joint_total(scenario)) / max(1.0, abs(expected)))
    return _identity_gate("brute-force-equivalence", deviations)


def spectral_reconstruction(rng: np.random.Generator) -> GateResult:
    deviations = []
    for case in range(RANDOM_CASES):
        op = _random_hermitian(rng, 2 + case % 3)
        decomp = spectral_decompose(op)
        scale = max(1.0, float(np.max(np.abs(op.entries))))
        deviations.append(float(np.max(np.abs(decomp.reconstruct() - op.entries))) / scale)
    return _identity_gate("spectral-reconstruction", deviations)


def mixed_term_identity(rng: np.random.Generator) -> GateResult:
    deviations = []
    for case in range(RANDOM_CASES):
        dim = 2 + case % 3
        u, v = _random_state(rng, dim), _random_state(rng, dim)
        op = _random_hermitian(rng, dim)
        table = build_mixed_table(u, v, spectral_decompose(op))
        deviations.append(abs(table.element - matrix_element(u, op, v)) / max(1.0, abs(table.element)))
    return _identity_gate("mixed-term-identity", deviations)


def _smoke_gate(name: str, rows) -> GateResult:
    worst = max(row.z_score for row in rows)
    points = ", ".join(f"{row.mc_mean_ab:.4f}~{row.oracle_total:.4f}" for row in rows)
    return GateResult(name, worst < SMOKE_Z_LIMIT, worst, f"max z {worst:.3f} ({points})")


def smoke_epr(seed: int, kappa: float) -> GateResult:
    cfg = ExperimentConfig(
        kind=ExperimentKind.EPR,
        trials=SMOKE_TRIALS,
        seed=seed,
        workers=1,
        angle_pairs=[(math.pi / 2, 0.0, math.pi / 2, gamma) for gamma in (0.0, math.pi / 3, math.pi)],
    )
    return _smoke_gate("smoke-epr", run_epr_scan(cfg, kappa=kappa))


def smoke_hbt(seed: int, kappa: float) -> GateResult:
    cfg = ExperimentConfig(
        kind=ExperimentKind.HBT,
        trials=SMOKE_TRIALS,
        seed=seed,
        workers=1,
        statistics=Statistics.FERMION,
        r_values=[[0.0, 0.0, 0.0], [math.pi, 0.0, 0.0]],
    )
    return _smoke_gate("smoke-hbt", run_hbt_scan(cfg, kappa=kappa))


GATES: tuple[tuple[str, Callable], ...] = (
    ("identity", singlet_equivalence),
    ("identity", brute_force_equivalence),
    ("identity", spectral_reconstruction),
    ("identity", mixed_term_identity),
    ("smoke", smoke_epr),
    ("smoke", smoke_hbt),
)


def selftest(seed: int = DEFAULT_SEED, kappa: float = EXCHANGE_KAPPA) -> tuple[int, list[GateResult]]:
    """
    Run every gate.

    Args:
        seed: Seed for the random identity cases and the smoke runs
        kappa: Exchange-reading scale handed to the smoke runs

    Returns:
        (exit code, gate results); the exit code is 0 iff every gate passed
    """
    rng = RngStream(seed, _IDENTITY_STREAM).generator()
    results = []
    for group, gate in GATES:
        try:
            result = gate(rng) if group == "identity" else gate(seed, kappa)
        except WavicleError as e:
            result = GateResult(gate.__name__.replace("_", "-"), False, math.nan, f"raised {type(e).__name__}: {e}")
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, "%s %s: %s", "PASS" if result.passed else "FAIL", result.name, result.detail)
        results.append(result)
    return (0 if all(result.passed for result in results) else 1), results
