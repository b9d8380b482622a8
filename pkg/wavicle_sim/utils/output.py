"""Result writers for csv, json and xlsx tables."""

import asyncio
import csv
import io
import json
import logging
import math
import os
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import aiofiles
from openpyxl import Workbook
from openpyxl.styles import Font, PatternFill

from .. import __version__
from ..errors import OutputError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "xlsx")

MEASURED_COLUMNS = (
    "mc_mean_a",
    "stderr_a",
    "mc_mean_b",
    "stderr_b",
    "mc_mean_ab",
    "stderr_ab",
    "mc_uncorr",
    "mc_corr",
    "oracle_uncorr",
    "oracle_corr",
    "oracle_total",
    "z_score",
)
TRAILING_COLUMNS = ("stderr_uncorr", "stderr_corr")


def version_string() -> str:
    """`git describe` of the source checkout, or v<package version> outside one."""
    try:
        described = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    return described or f"v{__version__}"


def result_metadata(cfg) -> dict[str, Any]:
    """Header echoed into json and xlsx output: seed, trials, version and the resolved config."""
    return {
        "kind": cfg.kind.value,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "version": version_string(),
        "config": cfg.model_dump(mode="json"),
    }


def format_real(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _ordered_union(dicts) -> list[str]:
    keys: dict[str, None] = {}
    for mapping in dicts:
        keys.update(dict.fromkeys(mapping))
    return list(keys)


def result_columns(rows) -> list[str]:
    """Scan-point columns, the fixed measurement block, then trailing extras."""
    return [
        *_ordered_union(row.scan_point for row in rows),
        *MEASURED_COLUMNS,
        *TRAILING_COLUMNS,
        *_ordered_union(row.extras for row in rows),
    ]


def _row_values(row, columns: list[str]) -> list:
    values = []
    for column in columns:
        if column in row.scan_point:
            values.append(row.scan_point[column])
        elif column in MEASURED_COLUMNS or column in TRAILING_COLUMNS:
            values.append(getattr(row, column))
        else:
            values.append(row.extras.get(column))
    return values


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def render_csv(rows) -> str:
    columns = result_columns(rows)
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_real(value) for value in _row_values(row, columns)])
    return output.getvalue()


def render_json(rows, metadata: dict[str, Any]) -> str:
    columns = result_columns(rows)
    records = []
    for row in rows:
        record = dict(zip(columns, _row_values(row, columns)))
        if row.histogram is not None:
            record["histogram"] = row.histogram
        records.append(record)
    document = {"metadata": metadata, "rows": records}
    return json.dumps(_json_safe(document), indent=2, allow_nan=False) + "\n"


class ResultWriter:
    """Write result tables atomically: temp sibling first, then os.replace."""

    def __init__(self):
        self._executor = ThreadPoolExecutor(max_workers=1)

    @staticmethod
    def _temp_sibling(path: Path) -> Path:
        try:
            fd, name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        except OSError as e:
            raise OutputError(f"cannot write to {path.parent}: {e.strerror}") from e
        os.close(fd)
        return Path(name)

    @staticmethod
    def _commit(temp: Path, path: Path) -> Path:
        try:
            os.replace(temp, path)
        except OSError as e:
            temp.unlink(missing_ok=True)
            raise OutputError(f"cannot write {path}: {e.strerror}") from e
        logger.info("wrote %s", path)
        return path

    async def _write_text(self, path: Path, text: str) -> Path:
        temp = self._temp_sibling(path)
        try:
            async with aiofiles.open(temp, "w", encoding="utf-8", newline="") as f:
                await f.write(text)
        except OSError as e:
            temp.unlink(missing_ok=True)
            raise OutputError(f"cannot write {path}: {e.strerror}") from e
        return self._commit(temp, path)

    async def write_csv(self, rows, path: Path) -> Path:
        return await self._write_text(path, render_csv(rows))

    async def write_json(self, rows, path: Path, metadata: dict[str, Any]) -> Path:
        return await self._write_text(path, render_json(rows, metadata))

    def _write_xlsx_sync(self, rows, path: Path, metadata: dict[str, Any]) -> Path:
        wb = Workbook()
        ws = wb.active
        ws.title = "Results"

        header_font = Font(bold=True, color="FFFFFF")
        header_fill = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")

        columns = result_columns(rows)
        for col_idx, name in enumerate(columns, 1):
            cell = ws.cell(row=1, column=col_idx, value=name)
            cell.font = header_font
            cell.fill = header_fill
        for row_idx, row in enumerate(rows, 2):
            for col_idx, value in enumerate(_row_values(row, columns), 1):
                ws.cell(row=row_idx, column=col_idx, value=_json_safe(value))
        for col_idx, name in enumerate(columns, 1):
            ws.column_dimensions[ws.cell(row=1, column=col_idx).column_letter].width = min(len(name) + 4, 50)

        meta = wb.create_sheet("Metadata")
        meta["A1"], meta["B1"] = "key", "value"
        meta["A1"].font = meta["B1"].font = Font(bold=True)
        flat = {key: value for key, value in metadata.items() if key != "config"}
        flat.update({f"config.{key}": value for key, value in metadata.get("config", {}).items()})
        for row_idx, (key, value) in enumerate(flat.items(), 2):
            meta.cell(row=row_idx, column=1, value=key)
            meta.cell(row=row_idx, column=2, value=value if isinstance(value, (int, float, str)) else json.dumps(value))

        temp = self._temp_sibling(path)
        try:
            wb.save(str(temp))
        except OSError as e:
            temp.unlink(missing_ok=True)
            raise OutputError(f"cannot write {path}: {e.strerror}") from e
        return self._commit(temp, path)

    async def write_xlsx(self, rows, path: Path, metadata: dict[str, Any]) -> Path:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, self._write_xlsx_sync, rows, path, metadata)

    async def write(self, rows, fmt: str, path: Path, metadata: dict[str, Any]) -> Path:
        if fmt == "csv":
            return await self.write_csv(rows, path)
        if fmt == "json":
            return await self.write_json(rows, path, metadata)
        if fmt == "xlsx":
            return await self.write_xlsx(rows, path, metadata)
        raise OutputError(f"unknown output format {fmt!r}")

    def shutdown(self):
        self._executor.shutdown(wait=True)


def write_results(rows, fmt: str, path: str | Path, metadata: dict[str, Any] | None = None) -> Path:
    """
    Serialise result rows to `path`.

    Args:
        rows: ResultRow list, in scan order
        fmt: csv, json or xlsx
        path: Destination file; replaced atomically
        metadata: Header for json/xlsx output

    Returns:
        The written path

    Raises:
        OutputError: the destination cannot be written
    """
    writer = ResultWriter()
    try:
        return asyncio.run(writer.write(list(rows), fmt, Path(path), metadata or {}))
    finally:
        writer.shutdown()
