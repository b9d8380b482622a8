import math

import pytest

from wavicle_sim.config import load_config
from wavicle_sim.errors import ConfigError
from wavicle_sim.experiments import (
    oracle_rows,
    run_epr_scan,
    run_experiment,
    run_hbt_scan,
    run_noise_analysis,
    run_spinflow,
    z_value,
)

EQUATOR = math.pi / 2
GATE = 4.0


def within(estimate, stderr, target, sigmas=GATE):
    return abs(estimate - target) <= sigmas * stderr + 1e-12


class TestZValue:

    def test_regular(self):
        assert z_value(1.5, 0.25, 1.0) == 2.0

    def test_zero_stderr(self):
        assert z_value(-1.0, 0.0, -1.0) == 0.0
        assert z_value(-1.0, 0.0, 0.0) == math.inf


class TestEprScan:

    def test_rows_follow_grid(self, small_config):
        gammas = [0.0, math.pi / 2, math.pi]
        cfg = small_config(kind="epr", angle_pairs=[(EQUATOR, 0.0, EQUATOR, g) for g in gammas])
        rows = run_epr_scan(cfg)
        assert [row.scan_point["gamma"] for row in rows] == pytest.approx(gammas)
        for row, gamma in zip(rows, gammas):
            assert row.oracle_total == pytest.approx(-2 * math.cos(gamma))
            assert within(row.mc_mean_ab, row.stderr_ab, row.oracle_total)
            assert within(row.mc_mean_a, row.stderr_a, 0.0)
            assert row.z_score < 5

    def test_reproducible(self, small_config):
        cfg = small_config(kind="epr", angle_pairs=[(EQUATOR, 0.0, EQUATOR, 0.3)])
        assert run_epr_scan(cfg) == run_epr_scan(cfg)

    def test_seed_changes_estimates(self, small_config):
        pairs = [(EQUATOR, 0.0, EQUATOR, 0.3)]
        first = run_epr_scan(small_config(kind="epr", angle_pairs=pairs, seed=1))[0]
        second = run_epr_scan(small_config(kind="epr", angle_pairs=pairs, seed=2))[0]
        assert first.mc_mean_ab != second.mc_mean_ab

    def test_bosons(self, small_config):
        cfg = small_config(kind="epr", statistics="boson", angle_pairs=[(EQUATOR, 0.0, EQUATOR, 0.0)])
        row = run_epr_scan(cfg)[0]
        assert row.oracle_total == pytest.approx(2.0)
        assert within(row.mc_mean_ab, row.stderr_ab, 2.0)

    def test_expectation_mode(self, small_config):
        cfg = small_config(kind="epr", sampling_mode="expectation", angle_pairs=[(EQUATOR, 0.0, EQUATOR, 1.0)])
        row = run_epr_scan(cfg)[0]
        assert row.z_score < 5

    def test_off_equator_directions(self, small_config):
        cfg = small_config(kind="epr", occ_u=2.0, occ_v=0.5, angle_pairs=[(0.4, 0.3, 2.2, 1.9)])
        row = run_epr_scan(cfg)[0]
        assert within(row.mc_mean_a, row.stderr_a, row.extras["oracle_mean_a"])
        assert within(row.mc_mean_ab, row.stderr_ab, row.oracle_total)

    def test_detuned_sources_leave_ensemble_unchanged(self, small_config):
        cfg = small_config(kind="epr", omega_u=1.3, omega_v=-0.4, time_step=0.01, angle_pairs=[(EQUATOR, 0.0, EQUATOR, 0.0)])
        row = run_epr_scan(cfg)[0]
        assert within(row.mc_mean_ab, row.stderr_ab, -2.0)

    def test_separated_geometry(self, small_config):
        cfg = small_config(kind="epr", geometry="separated", occ_u=2.0, occ_v=3.0, angle_pairs=[(0.0, 0.0, 0.0, 0.0)])
        row = run_epr_scan(cfg)[0]
        assert row.extras["oracle_separated"] == pytest.approx(-6.0)
        assert row.mc_mean_ab == pytest.approx(-6.0)
        assert row.stderr_ab == 0.0
        assert row.z_score == 0.0

    def test_wrong_kind(self, small_config):
        with pytest.raises(ConfigError):
            run_epr_scan(small_config(kind="hbt"))


class TestHbtScan:

    def test_fermion_antibunching(self, small_config):
        cfg = small_config(kind="hbt", statistics="fermion", r_values=[[0.0, 0.0, 0.0], [math.pi, 0.0, 0.0]])
        at_origin, half_period = run_hbt_scan(cfg)
        assert at_origin.oracle_total == 0.0
        assert within(at_origin.mc_mean_ab, at_origin.stderr_ab, 0.0)
        assert half_period.oracle_total == pytest.approx(4.0)
        assert within(half_period.mc_mean_ab, half_period.stderr_ab, 4.0)

    def test_boson_bunching(self, small_config):
        cfg = small_config(kind="hbt", statistics="boson", occ_u=1.5, occ_v=0.5, r_values=[[0.0, 0.0, 0.0]])
        row = run_hbt_scan(cfg)[0]
        background = 2 * 1.5 * 0.5
        assert row.oracle_total == pytest.approx(2 * background)
        assert row.oracle_uncorr == pytest.approx(background)
        assert within(row.mc_mean_ab, row.stderr_ab, 2 * background)

    def test_scan_point_columns(self, small_config):
        cfg = small_config(kind="hbt", p=[1.0, 0.0], p_prime=[0.0, 1.0], r_values=[[1.0, 2.0]])
        row = run_hbt_scan(cfg)[0]
        assert set(row.scan_point) == {"R_x", "R_y", "phase"}
        assert row.scan_point["phase"] == pytest.approx(-1.0)


class TestSpinflow:

    def test_plus_probability(self, small_config):
        cfg = small_config(kind="spinflow", occ_v=0.0, theta_values=[0.0, math.pi / 3, math.pi / 2])
        rows = run_spinflow(cfg)
        for row, expected in zip(rows, (1.0, 0.75, 0.5)):
            assert row.extras["oracle_p_plus"] == pytest.approx(expected)
            assert row.extras["z_p_plus"] < 5
        assert rows[0].extras["p_plus"] == 1.0

    def test_mean_reading(self, small_config):
        cfg = small_config(kind="spinflow", occ_u=1.0, occ_v=0.25, theta_values=[math.pi / 4, math.pi / 2])
        for row in run_spinflow(cfg):
            expected = math.cos(row.scan_point["theta"]) * 0.75
            assert row.extras["oracle_mean"] == pytest.approx(expected)
            assert row.extras["target_mean_a"] == pytest.approx(expected)
            assert within(row.mc_mean_a, row.stderr_a, expected)

    def test_balanced_flow_has_zero_mean(self, small_config):
        cfg = small_config(kind="spinflow", theta_values=[0.7])
        row = run_spinflow(cfg)[0]
        assert within(row.mc_mean_a, row.stderr_a, 0.0)
        assert row.mc_corr == 0.0


class TestNoiseAnalysis:

    def test_exchange_noise(self, small_config):
        rows = run_noise_analysis(small_config(kind="noise"))
        assert len(rows) == 1
        row = rows[0]
        assert row.extras["oracle_var_a"] == pytest.approx(0.5)
        assert row.extras["var_rel_err_a"] < 0.05
        assert row.extras["var_rel_err_b"] < 0.05
        assert abs(row.extras["mean_raw_a"]) < 5 * row.extras["stderr_raw_a"]
        assert within(row.mc_mean_ab, row.stderr_ab, row.oracle_corr)
        assert row.mc_uncorr == 0.0

    def test_histogram_and_ks(self, small_config):
        cfg = small_config(kind="noise", sampling_mode="expectation", histogram_bins=12)
        row = run_noise_analysis(cfg)[0]
        assert len(row.histogram["edges"]) == 13
        assert sum(row.histogram["counts_a"]) == cfg.trials
        assert row.extras["ks_pvalue_a"] > 1e-4
        assert row.extras["ks_stat_a"] < 0.05


class TestOracleRows:

    def test_epr_rows_have_no_estimates(self):
        rows = oracle_rows(load_config(kind="epr"))
        assert len(rows) == 13
        assert all(row.mc_mean_ab is None and row.z_score is None for row in rows)
        assert rows[0].oracle_total == pytest.approx(-2.0)
        assert rows[-1].oracle_total == pytest.approx(2.0)

    @pytest.mark.parametrize("kind, count", [("hbt", 41), ("spinflow", 5), ("noise", 1)])
    def test_other_kinds(self, kind, count):
        assert len(oracle_rows(load_config(kind=kind))) == count

    def test_dispatch(self, small_config):
        cfg = small_config(kind="noise")
        assert run_experiment(cfg) == run_noise_analysis(cfg)


@pytest.mark.slow
class TestAcceptance:

    def test_epr_correlation_curve(self):
        cfg = load_config(overrides={"kind": "epr", "trials": 1_000_000, "seed": 42})
        rows = run_epr_scan(cfg)
        assert len(rows) == 13
        for row in rows:
            assert within(row.mc_mean_ab, row.stderr_ab, -2 * math.cos(row.scan_point["gamma"]))
            assert within(row.mc_mean_a, row.stderr_a, 0.0)
            assert within(row.mc_mean_b, row.stderr_b, 0.0)
        assert abs(rows[0].mc_corr) > 10 * rows[0].stderr_corr

    @pytest.mark.parametrize("statistics", ["boson", "fermion"])
    def test_hbt_curve(self, statistics):
        cfg = load_config(overrides={"kind": "hbt", "trials": 100_000, "statistics": statistics})
        rows = run_hbt_scan(cfg)
        assert len(rows) == 41
        for row in rows:
            assert within(row.mc_mean_ab, row.stderr_ab, row.oracle_total, sigmas=5.0)
        expected_origin = 4.0 if statistics == "boson" else 0.0
        assert within(rows[0].mc_mean_ab, rows[0].stderr_ab, expected_origin)

    def test_probability_split(self):
        cfg = load_config(overrides={"kind": "spinflow", "trials": 1_000_000, "occ_v": 0.0})
        for row in run_spinflow(cfg):
            assert row.extras["plus_draws"] >= 1_000_000 * 0.45
            assert row.extras["z_p_plus"] < GATE

    def test_noise_quantification(self):
        cfg = load_config(overrides={"kind": "noise", "trials": 1_000_000})
        row = run_noise_analysis(cfg)[0]
        assert row.extras["var_rel_err_a"] < 0.05
        assert within(row.mc_mean_ab, row.stderr_ab, row.oracle_corr)

    def test_worker_count_invariance(self):
        pairs = [(EQUATOR, 0.0, EQUATOR, 0.5)]
        one = run_epr_scan(load_config(overrides={"trials": 300_000, "workers": 1, "angle_pairs": pairs}))
        eight = run_epr_scan(load_config(overrides={"trials": 300_000, "workers": 8, "angle_pairs": pairs}))
        assert one[0].mc_mean_ab == pytest.approx(eight[0].mc_mean_ab, rel=1e-9)
        assert one == eight
