import json
import math

import pytest
from openpyxl import load_workbook

from wavicle_sim.config import load_config
from wavicle_sim.errors import OutputError
from wavicle_sim.experiments import ResultRow
from wavicle_sim.utils.output import (
    MEASURED_COLUMNS,
    TRAILING_COLUMNS,
    format_real,
    render_csv,
    render_json,
    result_columns,
    result_metadata,
    version_string,
    write_results,
)


def sample_rows():
    return [
        ResultRow(
            scan_point={"gamma": 0.0},
            mc_mean_ab=-1.98,
            stderr_ab=0.01,
            oracle_total=-2.0,
            z_score=2.0,
            extras={"oracle_mean_a": 0.0},
        ),
        ResultRow(
            scan_point={"gamma": math.pi},
            oracle_total=2.0,
            extras={"target_mean_a": 0.0},
            histogram={"edges": [0.0, 1.0], "counts_a": [3], "counts_b": [3]},
        ),
    ]


class TestFormatting:

    def test_round_trip_precision(self):
        assert format_real(0.1) == "0.10000000000000001"
        assert float(format_real(math.pi)) == math.pi

    def test_missing_and_integral_values(self):
        assert format_real(None) == ""
        assert format_real(7) == "7"
        assert format_real(-2.0) == "-2"

    def test_column_order(self):
        columns = result_columns(sample_rows())
        assert columns[0] == "gamma"
        assert tuple(columns[1:1 + len(MEASURED_COLUMNS)]) == MEASURED_COLUMNS
        assert columns[-4:] == [*TRAILING_COLUMNS, "oracle_mean_a", "target_mean_a"]


class TestCsv:

    def test_header_only_for_zero_rows(self):
        text = render_csv([])
        assert text.count("\n") == 1
        assert text.startswith("mc_mean_a,")

    def test_rows(self):
        lines = render_csv(sample_rows()).splitlines()
        assert len(lines) == 3
        first = dict(zip(lines[0].split(","), lines[1].split(",")))
        assert first["mc_mean_ab"] == "-1.98"
        assert first["mc_mean_a"] == ""
        assert first["oracle_uncorr"] == "nan"
        assert first["target_mean_a"] == ""


class TestJson:

    def test_structure_and_nan(self):
        document = json.loads(render_json(sample_rows(), {"seed": 1}))
        assert document["metadata"] == {"seed": 1}
        first, second = document["rows"]
        assert first["oracle_uncorr"] is None
        assert first["z_score"] == 2.0
        assert "histogram" not in first
        assert second["histogram"]["counts_a"] == [3]

    def test_metadata(self):
        metadata = result_metadata(load_config(overrides={"seed": 5, "trials": 10}))
        assert (metadata["kind"], metadata["seed"], metadata["trials"]) == ("epr", 5, 10)
        assert metadata["config"]["statistics"] == "fermion"
        assert metadata["version"]

    def test_version_string(self):
        assert version_string().strip() != ""


class TestWriteResults:

    def test_csv_file(self, tmp_path):
        path = write_results(sample_rows(), "csv", tmp_path / "out.csv")
        assert path.read_text() == render_csv(sample_rows())
        assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]

    def test_replaces_existing_file(self, tmp_path):
        target = tmp_path / "out.json"
        target.write_text("stale")
        write_results(sample_rows(), "json", target, {"seed": 2})
        assert json.loads(target.read_text())["metadata"]["seed"] == 2

    def test_xlsx_sheets(self, tmp_path):
        path = write_results(sample_rows(), "xlsx", tmp_path / "out.xlsx", {"seed": 3, "config": {"trials": 10}})
        wb = load_workbook(path)
        assert wb.sheetnames == ["Results", "Metadata"]
        results = wb["Results"]
        assert results.cell(row=1, column=1).value == "gamma"
        assert results.cell(row=1, column=1).font.bold
        assert results.cell(row=3, column=1).value == pytest.approx(math.pi)
        metadata = {row[0]: row[1] for row in wb["Metadata"].iter_rows(min_row=2, values_only=True)}
        assert metadata == {"seed": 3, "config.trials": 10}

    def test_missing_directory(self, tmp_path):
        with pytest.raises(OutputError):
            write_results(sample_rows(), "csv", tmp_path / "absent" / "out.csv")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(OutputError):
            write_results(sample_rows(), "parquet", tmp_path / "out.parquet")
