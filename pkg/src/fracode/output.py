"""
frac-ode Output Manager

Writes result tables as CSV (with '#' metadata lines) or JSON, reads them
back, and records a manifest next to every table.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Literal

from fracode import __version__

logger = logging.getLogger(__name__)

Cell = float | int | str | None
TableFormat = Literal["csv", "json"]
TEXT_COLUMNS_KEY = "text_columns"


@dataclass
class Table:
    """Column names, rows of cells, and a metadata preamble."""
    columns: list[str]
    rows: list[list[Cell]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row has {len(row)} cells, expected {len(self.columns)}")

    def column(self, name: str) -> list[Cell]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def model_dump(self) -> dict:
        return {"metadata": self.metadata, "columns": self.columns, "rows": self.rows}


def format_number(value: Cell) -> str:
    """Shortest round-trip text: 17 significant digits at most."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(text: str, is_text: bool = False) -> Cell:
    if text == "":
        return None
    if is_text:
        return text
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _text_columns(table: Table) -> list[str]:
    """Columns holding at least one string cell."""
    return [
        name
        for i, name in enumerate(table.columns)
        if any(isinstance(row[i], str) for row in table.rows)
    ]


def _preamble(table: Table, reproducible: bool) -> dict[str, Any]:
    metadata = {"version": __version__, **table.metadata}
    if not reproducible:
        metadata["created_at"] = datetime.now().isoformat()
    return metadata


def render_table(table: Table, fmt: TableFormat = "csv", reproducible: bool = False) -> str:
    metadata = _preamble(table, reproducible)
    if fmt == "json":
        payload = {"metadata": metadata, "columns": table.columns, "rows": table.rows}
        return json.dumps(payload, indent=2) + "\n"
    text_columns = _text_columns(table)
    if text_columns:
        # CSV cells are untyped; "1e-3" in a message column must stay text
        metadata[TEXT_COLUMNS_KEY] = text_columns
    buffer = io.StringIO()
    for key, value in metadata.items():
        buffer.write(f"# {key} = {json.dumps(value)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_number(cell) for cell in row])
    return buffer.getvalue()


def write_table(
    table: Table, path: str | Path, fmt: TableFormat = "csv", reproducible: bool = False
) -> Path:
    """
    Write table to path.

    Args:
        table: Table to write
        path: Target file
        fmt: csv or json
        reproducible: Omit the created_at line so reruns are byte-identical

    Returns:
        Path written
    """
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(render_table(table, fmt, reproducible))
    logger.info(f"wrote {len(table.rows)} rows to {path}")
    return path


def read_table(path: str | Path) -> Table:
    """Parse a table written by write_table (format detected from content)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        return Table(payload["columns"], payload["rows"], payload["metadata"])

    metadata: dict[str, Any] = {}
    body: list[str] = []
    for line in text.splitlines():
        if line.startswith("# ") and not body:
            key, _, value = line[2:].partition(" = ")
            metadata[key] = json.loads(value)
        else:
            body.append(line)
    text_columns = set(metadata.pop(TEXT_COLUMNS_KEY, []))
    reader = csv.reader(body)
    columns = next(reader)
    is_text = [name in text_columns for name in columns]
    rows = [[_parse_cell(cell, flag) for cell, flag in zip(row, is_text)] for row in reader]
    return Table(columns, rows, metadata)


@dataclass
class OutputManifest:
    """Manifest of one run's outputs."""
    version: str = __version__
    created_at: str | None = None
    command: str = ""
    table_file: str | None = None
    format: str = "csv"
    exit_code: int = 0
    row_count: int = 0
    partial: bool = False
    parameters: dict[str, Any] = field(default_factory=dict)

    def model_dump(self) -> dict:
        data = {
            "version": self.version,
            "command": self.command,
            "table_file": self.table_file,
            "format": self.format,
            "exit_code": self.exit_code,
            "row_count": self.row_count,
            "partial": self.partial,
            "parameters": self.parameters,
        }
        if self.created_at is not None:
            data["created_at"] = self.created_at
        return data


def manifest_path_for(table_path: str | Path) -> Path:
    table_path = Path(table_path)
    return table_path.with_name(table_path.name + ".manifest.json")


def save_manifest(manifest: OutputManifest, table_path: str | Path) -> Path | None:
    """
    Save manifest as <table>.manifest.json.

    Returns:
        Path to manifest file or None on error
    """
    path = manifest_path_for(table_path)
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest.model_dump(), f, indent=2)
        return path
    except OSError as e:
        logger.error(f"Failed to save manifest: {e}")
        return None


def persist_outputs(
    table: Table,
    path: str | Path,
    fmt: TableFormat = "csv",
    reproducible: bool = False,
    exit_code: int = 0,
    parameters: dict[str, Any] | None = None,
) -> dict:
    """
    Write the table and its manifest.

    Returns:
        Dict with the table and manifest paths
    """
    table_path = write_table(table, path, fmt, reproducible)
    manifest = OutputManifest(
        created_at=None if reproducible else datetime.now().isoformat(),
        command=str(table.metadata.get("command", "")),
        table_file=str(table_path),
        format=fmt,
        exit_code=exit_code,
        row_count=len(table.rows),
        partial=exit_code == 2,
        parameters=parameters or {},
    )
    manifest_path = save_manifest(manifest, table_path)
    return {"table": str(table_path), "manifest": str(manifest_path) if manifest_path else None}
