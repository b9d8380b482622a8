"""Config-driven scans that pit Monte Carlo estimates against the oracle."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.stats

from .config import ExperimentConfig, ExperimentKind, Geometry
from .errors import ConfigError
from .orchestrator import (
    DIAGONAL_MIX,
    EXCHANGE_MIX,
    SEPARATED_MIX,
    SHARED_MIX,
    Orchestrator,
    PointPlan,
    PointResult,
)
from .physics import oracle
from .physics.algebra import SPIN_DOWN, SPIN_UP, Direction, spin_operator
from .physics.estimator import joint_average
from .physics.sampler import EXCHANGE_KAPPA, DetectorModel, plane_wave_detector
from .physics.wavicle import ChannelKind, SourceSpec

logger = logging.getLogger(__name__)


@dataclass
class ResultRow:
    """One scan point: Monte Carlo estimates next to their analytic values."""

    scan_point: dict[str, float]
    mc_mean_a: float | None = None
    stderr_a: float | None = None
    mc_mean_b: float | None = None
    stderr_b: float | None = None
    mc_mean_ab: float | None = None
    stderr_ab: float | None = None
    mc_uncorr: float | None = None
    stderr_uncorr: float | None = None
    mc_corr: float | None = None
    stderr_corr: float | None = None
    oracle_uncorr: float = math.nan
    oracle_corr: float = math.nan
    oracle_total: float = math.nan
    z_score: float | None = None
    extras: dict[str, float] = field(default_factory=dict)
    histogram: dict | None = None


def z_value(estimate: float, stderr: float, target: float) -> float:
    """|estimate - target| / stderr; zero-width error bars give 0 on a hit, inf on a miss."""
    if stderr > 0.0:
        return abs(estimate - target) / stderr
    return 0.0 if math.isclose(estimate, target, rel_tol=1e-12, abs_tol=1e-12) else math.inf


def _channel_mix(cfg: ExperimentConfig) -> tuple[float, float, float, float]:
    if cfg.kind is ExperimentKind.NOISE:
        return EXCHANGE_MIX
    if cfg.kind is ExperimentKind.SPINFLOW:
        return DIAGONAL_MIX
    return SEPARATED_MIX if cfg.geometry is Geometry.SEPARATED else SHARED_MIX


def _spin_sources(cfg: ExperimentConfig) -> tuple[SourceSpec, SourceSpec]:
    return (
        SourceSpec("up", SPIN_UP, cfg.occ_u, cfg.omega_u),
        SourceSpec("down", SPIN_DOWN, cfg.occ_v, cfg.omega_v),
    )


def _spin_detector(direction: Direction) -> DetectorModel:
    return DetectorModel.from_operator(spin_operator(direction), SPIN_UP, SPIN_DOWN)


def _spin_point(cfg: ExperimentConfig, pair) -> tuple[Direction, Direction, oracle.TwoSourceScenario]:
    dir_a = Direction(pair[0], pair[1])
    dir_b = Direction(pair[2], pair[3])
    scenario = oracle.SpinScenario(dir_a, dir_b, cfg.occ_u, cfg.occ_v).to_two_source(cfg.statistics)
    return dir_a, dir_b, scenario


def _plan(
    cfg: ExperimentConfig,
    index: int,
    label: str,
    sources: tuple[SourceSpec, SourceSpec],
    det_a: DetectorModel,
    det_b: DetectorModel,
    kappa: float,
    collect: bool = False,
) -> PointPlan:
    return PointPlan(
        scenario=f"{cfg.kind.value}[{index}]:{label}",
        sources=sources,
        det_a=det_a,
        det_b=det_b,
        stats=cfg.statistics,
        trials=cfg.trials,
        seed=cfg.seed,
        stream_id=index,
        channel_mix=_channel_mix(cfg),
        mode=cfg.sampling_mode,
        kappa=kappa,
        time_step=cfg.time_step,
        collect_readings=collect,
    )


def _fill_estimates(row: ResultRow, result: PointResult) -> ResultRow:
    plan = result.plan
    estimate = joint_average(result.accumulator)
    targets = oracle.expected_mix_targets(plan.sources, plan.det_a, plan.det_b, plan.stats, plan.channel_mix)

    row.mc_mean_a, row.stderr_a = estimate.mean_a
    row.mc_mean_b, row.stderr_b = estimate.mean_b
    row.mc_mean_ab, row.stderr_ab = estimate.mean_ab
    row.mc_uncorr, row.stderr_uncorr = estimate.uncorrelated_part
    row.mc_corr, row.stderr_corr = estimate.correlated_part
    row.extras.update({
        "target_mean_a": targets.mean_a,
        "target_mean_b": targets.mean_b,
        "target_mean_ab": targets.mean_ab,
    })
    row.z_score = max(
        z_value(*estimate.mean_a, targets.mean_a),
        z_value(*estimate.mean_b, targets.mean_b),
        z_value(*estimate.mean_ab, targets.mean_ab),
    )
    return row


def _simulate(
    cfg: ExperimentConfig,
    plans: list[PointPlan],
    progress_callback: Callable[[int, int], None] | None,
) -> list[PointResult]:
    orchestrator = Orchestrator(workers=cfg.workers, progress_callback=progress_callback)
    return orchestrator.run_sync(plans)


def _epr_rows(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[tuple]]:
    rows, points = [], []
    for pair in cfg.angle_pairs:
        dir_a, dir_b, scenario = _spin_point(cfg, pair)
        mean_a, mean_b = oracle.expected_separate(scenario)
        row = ResultRow(
            scan_point={
                "theta_a": dir_a.theta,
                "phi_a": dir_a.phi,
                "theta_b": dir_b.theta,
                "phi_b": dir_b.phi,
                "gamma": oracle.spin_gamma(dir_a, dir_b),
            },
            oracle_uncorr=oracle.expected_joint_uncorr(scenario),
            oracle_corr=oracle.expected_joint_corr(scenario),
            oracle_total=oracle.expected_joint_total(scenario),
            extras={"oracle_mean_a": mean_a, "oracle_mean_b": mean_b},
        )
        if cfg.geometry is Geometry.SEPARATED:
            row.extras["oracle_separated"] = oracle.expected_joint_separated(scenario)
        rows.append(row)
        points.append((dir_a, dir_b))
    return rows, points


def run_epr_scan(
    cfg: ExperimentConfig,
    progress_callback: Callable[[int, int], None] | None = None,
    kappa: float = EXCHANGE_KAPPA,
) -> list[ResultRow]:
    """Spin correlation of up/down sources over a grid of direction pairs."""
    _require_kind(cfg, ExperimentKind.EPR)
    rows, points = _epr_rows(cfg)
    sources = _spin_sources(cfg)
    plans = [
        _plan(cfg, i, f"{cfg.statistics.value}", sources, _spin_detector(dir_a), _spin_detector(dir_b), kappa)
        for i, (dir_a, dir_b) in enumerate(points)
    ]
    results = _simulate(cfg, plans, progress_callback)
    return [_fill_estimates(row, result) for row, result in zip(rows, results)]


def _hbt_rows(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    momentum = np.asarray(cfg.p) - np.asarray(cfg.p_prime)
    for displacement in cfg.r_values:
        phase = float(np.dot(momentum, displacement))
        scan_point = {f"R_{axis}": float(value) for axis, value in zip("xyz", displacement)}
        scan_point["phase"] = phase
        background = 2.0 * cfg.occ_u * cfg.occ_v
        rows.append(ResultRow(
            scan_point=scan_point,
            oracle_uncorr=background,
            oracle_corr=cfg.statistics.sign * math.cos(phase) * background,
            oracle_total=oracle.hbt_correlation(cfg.p, cfg.p_prime, displacement, cfg.occ_u, cfg.occ_v, cfg.statistics),
        ))
    return rows


def run_hbt_scan(
    cfg: ExperimentConfig,
    progress_callback: Callable[[int, int], None] | None = None,
    kappa: float = EXCHANGE_KAPPA,
) -> list[ResultRow]:
    """Intensity correlation of two plane-wave sources versus detector separation.

    Detector A sits at R, detector B at the origin; pure readings are unit
    intensities and exchange readings carry the phase (p - p') . R.
    """
    _require_kind(cfg, ExperimentKind.HBT)
    rows = _hbt_rows(cfg)
    sources = (
        SourceSpec("p", None, cfg.occ_u, cfg.omega_u),
        SourceSpec("p_prime", None, cfg.occ_v, cfg.omega_v),
    )
    origin = np.zeros(len(cfg.p))
    det_b = plane_wave_detector(cfg.p, cfg.p_prime, origin)
    plans = [
        _plan(cfg, i, cfg.statistics.value, sources, plane_wave_detector(cfg.p, cfg.p_prime, r), det_b, kappa)
        for i, r in enumerate(cfg.r_values)
    ]
    results = _simulate(cfg, plans, progress_callback)
    return [_fill_estimates(row, result) for row, result in zip(rows, results)]


def _spinflow_rows(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for theta in cfg.theta_values:
        direction = Direction(theta, 0.0)
        scenario = oracle.SpinScenario(direction, direction, cfg.occ_u, cfg.occ_v).to_two_source(cfg.statistics)
        rows.append(ResultRow(
            scan_point={"theta": direction.theta},
            oracle_uncorr=oracle.expected_joint_uncorr(scenario),
            oracle_corr=oracle.expected_joint_corr(scenario),
            oracle_total=oracle.expected_joint_total(scenario),
            extras={
                "oracle_mean": oracle.spin_flow_mean(direction.theta, cfg.occ_u, cfg.occ_v),
                "oracle_p_plus": oracle.spin_flow_plus_probability(direction.theta),
            },
        ))
    return rows


def _plus_frequency(result: PointResult) -> tuple[float, int]:
    """Fraction of +1 readings among all readings taken on the spin-up source."""
    readings = result.readings
    up_a = readings.a[readings.kinds == ChannelKind.DIAG_UV.index]
    up_b = readings.b[readings.kinds == ChannelKind.DIAG_VU.index]
    draws = up_a.shape[0] + up_b.shape[0]
    plus = int(np.count_nonzero(up_a > 0.0) + np.count_nonzero(up_b > 0.0))
    return (plus / draws if draws else math.nan), draws


def run_spinflow(
    cfg: ExperimentConfig,
    progress_callback: Callable[[int, int], None] | None = None,
    kappa: float = EXCHANGE_KAPPA,
) -> list[ResultRow]:
    """Polarised spin flow read at polar angles theta: +1/-1 split and mean."""
    _require_kind(cfg, ExperimentKind.SPINFLOW)
    rows = _spinflow_rows(cfg)
    sources = _spin_sources(cfg)
    plans = []
    for i, theta in enumerate(cfg.theta_values):
        detector = _spin_detector(Direction(theta, 0.0))
        plans.append(_plan(cfg, i, f"theta={theta!r}", sources, detector, detector, kappa, collect=True))
    results = _simulate(cfg, plans, progress_callback)

    for row, result in zip(rows, results):
        _fill_estimates(row, result)
        frequency, draws = _plus_frequency(result)
        expected = row.extras["oracle_p_plus"]
        binomial = math.sqrt(expected * (1.0 - expected) / draws) if draws else math.nan
        z_plus = z_value(frequency, binomial, expected)
        row.extras.update({
            "p_plus": frequency,
            "p_plus_stderr": binomial,
            "plus_draws": draws,
            "z_p_plus": z_plus,
        })
        row.z_score = max(row.z_score, z_plus)
    return rows


def _noise_rows(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[tuple]]:
    rows, points = _epr_rows(cfg)
    for row, (dir_a, dir_b) in zip(rows, points):
        row.extras["oracle_var_a"] = oracle.mixed_noise_variance(SPIN_UP, SPIN_DOWN, spin_operator(dir_a), cfg.sampling_mode)
        row.extras["oracle_var_b"] = oracle.mixed_noise_variance(SPIN_UP, SPIN_DOWN, spin_operator(dir_b), cfg.sampling_mode)
    return rows, points


def _reading_statistics(values: np.ndarray, cdf, prefix: str) -> dict[str, float]:
    mean = float(np.mean(values))
    variance = float(np.mean(values * values) - mean * mean)
    stats = {
        f"mean_raw_{prefix}": mean,
        f"stderr_raw_{prefix}": math.sqrt(max(variance, 0.0) / max(values.shape[0] - 1, 1)),
        f"var_{prefix}": variance,
    }
    ks = scipy.stats.kstest(values, cdf)
    stats[f"ks_stat_{prefix}"] = float(ks.statistic)
    stats[f"ks_pvalue_{prefix}"] = float(ks.pvalue)
    return stats


def run_noise_analysis(
    cfg: ExperimentConfig,
    progress_callback: Callable[[int, int], None] | None = None,
    kappa: float = EXCHANGE_KAPPA,
) -> list[ResultRow]:
    """Exchange channels only: per-detector noise versus joint-product signal."""
    _require_kind(cfg, ExperimentKind.NOISE)
    rows, points = _noise_rows(cfg)
    sources = _spin_sources(cfg)
    plans = [
        _plan(cfg, i, cfg.statistics.value, sources, _spin_detector(dir_a), _spin_detector(dir_b), kappa, collect=True)
        for i, (dir_a, dir_b) in enumerate(points)
    ]
    results = _simulate(cfg, plans, progress_callback)

    for row, result in zip(rows, results):
        _fill_estimates(row, result)
        plan = result.plan
        raw_a = result.readings.a / plan.kappa
        raw_b = result.readings.b / plan.kappa
        row.extras.update(_reading_statistics(raw_a, oracle.mixed_reading_cdf(plan.det_a.mixed_uv, plan.mode), "a"))
        row.extras.update(_reading_statistics(raw_b, oracle.mixed_reading_cdf(plan.det_b.mixed_uv, plan.mode), "b"))
        for prefix in ("a", "b"):
            expected = row.extras[f"oracle_var_{prefix}"]
            observed = row.extras[f"var_{prefix}"]
            row.extras[f"var_rel_err_{prefix}"] = abs(observed - expected) / expected if expected > 0.0 else abs(observed)
        counts_a, edges = np.histogram(raw_a, bins=cfg.histogram_bins)
        counts_b, _ = np.histogram(raw_b, bins=edges)
        row.histogram = {
            "edges": edges.tolist(),
            "counts_a": counts_a.tolist(),
            "counts_b": counts_b.tolist(),
        }
    return rows


def oracle_rows(cfg: ExperimentConfig) -> list[ResultRow]:
    """Analytic rows for the configured scan, Monte Carlo columns left empty."""
    if cfg.kind is ExperimentKind.EPR:
        return _epr_rows(cfg)[0]
    if cfg.kind is ExperimentKind.HBT:
        return _hbt_rows(cfg)
    if cfg.kind is ExperimentKind.SPINFLOW:
        return _spinflow_rows(cfg)
    return _noise_rows(cfg)[0]


RUNNERS = {
    ExperimentKind.EPR: run_epr_scan,
    ExperimentKind.HBT: run_hbt_scan,
    ExperimentKind.SPINFLOW: run_spinflow,
    ExperimentKind.NOISE: run_noise_analysis,
}


def run_experiment(
    cfg: ExperimentConfig,
    progress_callback: Callable[[int, int], None] | None = None,
    kappa: float = EXCHANGE_KAPPA,
) -> list[ResultRow]:
    logger.info("running %s scan: %d trials per point, seed %d", cfg.kind.value, cfg.trials, cfg.seed)
    return RUNNERS[cfg.kind](cfg, progress_callback, kappa=kappa)


def _require_kind(cfg: ExperimentConfig, kind: ExperimentKind) -> None:
    if cfg.kind is not kind:
        raise ConfigError(f"expected a {kind.value} config, got {cfg.kind.value}", key="kind")
