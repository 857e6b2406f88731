"""
Tests for table output and manifests.
"""

import json

import pytest

from fracode import __version__
from fracode.output import (
    Table,
    format_number,
    manifest_path_for,
    persist_outputs,
    read_table,
    render_table,
    write_table,
)


def sample_table():
    return Table(
        columns=["t", "v", "note"],
        rows=[[0.0, 1.0, "start"], [0.1, 0.1 + 0.2, None]],
        metadata={"command": "solve", "gamma": 0.5},
    )


class TestFormatting:
    """Tests for cell formatting."""

    def test_numbers_round_trip(self):
        """Floats keep every significant digit."""
        assert float(format_number(0.1 + 0.2)) == 0.1 + 0.2
        assert format_number(3) == "3"

    def test_special_cells(self):
        """None is empty and booleans are lowercase."""
        assert format_number(None) == ""
        assert format_number(True) == "true"

    def test_row_length_checked(self):
        """Rows must match the header."""
        with pytest.raises(ValueError):
            Table(columns=["a", "b"], rows=[[1.0]])


class TestTables:
    """Tests for writing and reading tables."""

    def test_csv_preamble(self):
        """Metadata lines come first, version leading."""
        text = render_table(sample_table(), reproducible=True)
        lines = text.splitlines()
        assert lines[0] == f'# version = "{__version__}"'
        assert lines[1] == '# command = "solve"'
        assert lines[3] == '# text_columns = ["note"]'
        assert lines[4] == "t,v,note"
        assert "created_at" not in text

    def test_timestamp_unless_reproducible(self):
        """created_at is present by default."""
        assert "# created_at = " in render_table(sample_table())

    def test_reproducible_output_is_stable(self):
        """Reproducible renders are byte-identical."""
        first = render_table(sample_table(), "json", reproducible=True)
        assert first == render_table(sample_table(), "json", reproducible=True)

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_read_back(self, tmp_path, fmt):
        """write_table output parses back to the same rows."""
        path = write_table(sample_table(), tmp_path / f"out.{fmt}", fmt, reproducible=True)
        table = read_table(path)
        assert table.columns == ["t", "v", "note"]
        assert table.rows == sample_table().rows
        assert table.metadata["gamma"] == 0.5

    def test_numeric_looking_text_survives(self, tmp_path):
        """Text cells such as "1e-3" come back as strings, not floats."""
        table = Table(columns=["x", "message"], rows=[[1.0, "1e-3"], [2.0, "true"]])
        back = read_table(write_table(table, tmp_path / "text.csv", reproducible=True))
        assert back.column("message") == ["1e-3", "true"]
        assert back.column("x") == [1.0, 2.0]
        assert "text_columns" not in back.metadata

    def test_numeric_tables_have_no_text_line(self):
        """Purely numeric tables keep the plain preamble."""
        table = Table(columns=["t", "v"], rows=[[0.0, 1.0]])
        assert "text_columns" not in render_table(table, reproducible=True)

    def test_creates_parent_directories(self, tmp_path):
        """Missing output directories are created."""
        path = write_table(sample_table(), tmp_path / "a" / "b" / "out.csv")
        assert path.exists()


class TestManifest:
    """Tests for persist_outputs."""

    def test_manifest_written(self, tmp_path):
        """A manifest sits next to every table."""
        paths = persist_outputs(
            sample_table(), tmp_path / "out.csv", exit_code=2, parameters={"gamma": 0.5}
        )
        manifest_file = manifest_path_for(paths["table"])
        assert paths["manifest"] == str(manifest_file)
        data = json.loads(manifest_file.read_text())
        assert data["command"] == "solve"
        assert data["row_count"] == 2
        assert data["partial"] is True
        assert data["parameters"] == {"gamma": 0.5}
        assert "created_at" in data

    def test_reproducible_manifest(self, tmp_path):
        """Reproducible runs omit the manifest timestamp."""
        paths = persist_outputs(sample_table(), tmp_path / "out.json", "json", reproducible=True)
        data = json.loads(manifest_path_for(paths["table"]).read_text())
        assert "created_at" not in data
        assert data["partial"] is False
