import json
from pathlib import Path

import pytest

from wavicle_sim.cli import create_progress_bar, main, parse_invocation
from wavicle_sim.config import ExperimentKind

FAST = ["--trials", "2000", "--workers", "2", "--seed", "11"]


class TestParseInvocation:

    def test_scan_flags_become_overrides(self):
        invocation = parse_invocation(["epr", "--trials", "500", "--seed", "3", "--stats", "boson", "--mode", "expectation"])
        assert invocation.kind is ExperimentKind.EPR
        assert invocation.overrides == {"trials": 500, "seed": 3, "statistics": "boson", "sampling_mode": "expectation"}
        assert invocation.output_path == Path("epr.csv")
        assert invocation.format == "csv"

    def test_format_from_suffix(self):
        invocation = parse_invocation(["hbt", "--out", "curve.json"])
        assert invocation.format == "json"
        assert invocation.output_path == Path("curve.json")

    def test_explicit_format_wins(self):
        assert parse_invocation(["hbt", "-o", "curve.json", "-f", "xlsx"]).format == "xlsx"

    def test_set_assignments(self):
        invocation = parse_invocation(["spinflow", "--set", "theta_values=[0.5]", "--set", "occ_v=0"])
        assert invocation.overrides == {"theta_values": [0.5], "occ_v": 0}

    def test_oracle_table_kind(self):
        invocation = parse_invocation(["oracle-table", "--kind", "noise"])
        assert invocation.kind is ExperimentKind.NOISE
        assert invocation.output_path == Path("oracle-table.csv")

    def test_selftest_seed(self):
        invocation = parse_invocation(["selftest", "--seed", "8"])
        assert invocation.overrides == {"seed": 8}
        assert invocation.kind is None

    def test_negative_trials(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            parse_invocation(["epr", "--trials", "-5"])
        assert excinfo.value.code == 2
        err = capsys.readouterr().err
        assert err.count("\n") == 1
        assert "--trials" in err

    def test_bad_assignment(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            parse_invocation(["epr", "--set", "trials"])
        assert excinfo.value.code == 2
        assert "key=value" in capsys.readouterr().err

    def test_quiet_and_verbose_conflict(self):
        with pytest.raises(SystemExit) as excinfo:
            parse_invocation(["epr", "-q", "--verbose"])
        assert excinfo.value.code == 2

    def test_help(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            parse_invocation(["--help"])
        assert excinfo.value.code == 0
        assert "oracle-table" in capsys.readouterr().out

    def test_progress_bar(self):
        assert create_progress_bar(1, 4, width=8) == "[==------] 1/4 chunks (25.0%)"


class TestMain:

    def test_epr_scan_is_reproducible(self, tmp_path):
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        args = ["epr", "-q", *FAST, "--set", "angle_pairs=[[1.5707963267948966, 0, 1.5707963267948966, 0.5]]"]
        assert main([*args, "--out", str(first)]) == 0
        assert main([*args, "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        header, row = first.read_text().splitlines()
        assert header.startswith("theta_a,phi_a,theta_b,phi_b,gamma,mc_mean_a")

    def test_oracle_table_json(self, tmp_path):
        out = tmp_path / "table.json"
        assert main(["oracle-table", "-k", "spinflow", "-q", "-o", str(out)]) == 0
        document = json.loads(out.read_text())
        assert document["metadata"]["kind"] == "spinflow"
        assert len(document["rows"]) == 5
        assert document["rows"][0]["mc_mean_a"] is None

    def test_noise_summary(self, tmp_path, capsys):
        out = tmp_path / "noise.json"
        assert main(["noise", *FAST, "-o", str(out)]) == 0
        assert "Scan complete!" in capsys.readouterr().out
        assert "histogram" in json.loads(out.read_text())["rows"][0]

    def test_config_file(self, tmp_path):
        config = tmp_path / "hbt.json"
        config.write_text(json.dumps({"r_values": [[0.0, 0.0, 0.0]], "statistics": "boson"}))
        out = tmp_path / "hbt.csv"
        assert main(["hbt", "-q", "-c", str(config), *FAST, "-o", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 2

    def test_missing_config(self, tmp_path, capsys):
        assert main(["epr", "-q", "-c", str(tmp_path / "absent.json")]) == 2
        assert capsys.readouterr().err.startswith("Error: ")

    def test_invalid_statistics_in_config(self, tmp_path, capsys):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"statistics": "anyon"}))
        assert main(["epr", "-q", "-c", str(config)]) == 2
        assert "statistics" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        out = tmp_path / "absent" / "out.csv"
        assert main(["oracle-table", "-q", "-o", str(out)]) == 1

    def test_selftest_with_wrong_kappa(self, capsys):
        assert main(["selftest", "-q", "--kappa", "1"]) == 1
        assert "smoke-epr" in capsys.readouterr().err
