"""
Tests for frac-ode configuration system.
"""

import json

import pytest
from pydantic import ValidationError

from fracode.config import (
    MittagLefflerConfig,
    OutputConfig,
    RunConfig,
    SolverConfig,
    apply_overrides,
    load_config,
    save_config,
)
from fracode.errors import ConfigError


class TestDefaultConfig:
    """Tests for default configuration values."""

    def test_default_command(self):
        """Default command should be the acceptance suite."""
        config = RunConfig()
        assert config.command == "suite"

    def test_default_grid(self):
        """Default grid is h = 1/1024 on [0, 1]."""
        config = RunConfig()
        assert config.solver.h == 1.0 / 1024.0
        assert config.solver.t_end == 1.0
        assert config.solver.growth_cap == 1e8

    def test_default_output(self):
        """Default output is a timestamped csv."""
        config = RunConfig()
        assert config.output.format == "csv"
        assert config.output.reproducible is False

    def test_lambda_alias(self):
        """lambda is accepted under its alias and its field name."""
        assert RunConfig.model_validate({"lambda": 2.0}).lam == 2.0
        assert RunConfig(lam=3.0).lam == 3.0


class TestConfigSerialization:
    """Tests for config serialization."""

    def test_config_to_dict(self):
        """Config should serialize to dict."""
        data = RunConfig().model_dump(by_alias=True)

        assert isinstance(data, dict)
        assert "solver" in data
        assert "ml" in data
        assert "lambda" in data

    def test_config_roundtrip(self, tmp_path):
        """Config should roundtrip through save/load."""
        config = RunConfig(
            command="solve",
            rhs="square",
            solver=SolverConfig(h=0.125, method="picard"),
        )

        config_path = tmp_path / "fracode.json"
        save_config(config, config_path)

        assert config_path.exists()
        with open(config_path) as f:
            data = json.load(f)

        wrapper = data.get("frac-ode")
        assert wrapper is not None
        assert wrapper["rhs"] == "square"
        assert wrapper["solver"]["method"] == "picard"

        loaded = load_config(config_path)
        assert loaded == config


class TestConfigValidation:
    """Tests for config validation."""

    def test_invalid_format_rejected(self):
        """Invalid table format should be rejected."""
        with pytest.raises(ValidationError):
            OutputConfig(format="xlsx")

    def test_invalid_alpha_rejected(self):
        """alpha outside (0, 2] should be rejected."""
        with pytest.raises(ValidationError):
            MittagLefflerConfig(alpha=2.5)

    def test_small_growth_cap_rejected(self):
        """growth_cap below 1e6 should be rejected."""
        with pytest.raises(ValidationError):
            SolverConfig(growth_cap=10.0)

    def test_unknown_rhs_names_field(self):
        """Unknown rhs names are reported against the rhs field."""
        with pytest.raises(ConfigError) as excinfo:
            load_config(overrides={"rhs": "cubic"})
        assert excinfo.value.field == "rhs"

    def test_gamma_range_depends_on_command(self):
        """Solvers need gamma in (0, 1); ml and suite do not use it."""
        with pytest.raises(ConfigError) as excinfo:
            load_config(overrides={"command": "solve", "gamma": 1.5})
        assert excinfo.value.field == "gamma"
        assert load_config(overrides={"command": "ml", "gamma": 1.5}).gamma == 1.5

    def test_scalar_v0_coerced(self):
        """A bare number becomes a one-element list."""
        assert RunConfig.model_validate({"v0": 2}).v0 == [2.0]


class TestLoading:
    """Tests for file discovery and overrides."""

    def test_overrides_are_dotted(self):
        """Dotted keys reach nested sections; None is skipped."""
        merged = apply_overrides({"solver": {"h": 0.5}}, {"solver.t_end": 2.0, "gamma": None})
        assert merged == {"solver": {"h": 0.5, "t_end": 2.0}}

    def test_flags_override_file(self, tmp_path):
        """Overrides win over file values."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"gamma": 0.3, "solver": {"h": 0.25}}))
        config = load_config(path, {"solver.h": 0.125})
        assert config.gamma == 0.3
        assert config.solver.h == 0.125

    def test_unwrapped_layout_accepted(self, tmp_path):
        """Files may omit the frac-ode wrapper."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"command": "ml"}))
        assert load_config(path).command == "ml"

    def test_explicit_bad_file_raises(self, tmp_path):
        """An explicit path that does not parse is a config error."""
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert excinfo.value.field == "config"

    def test_discovered_bad_file_falls_back(self, tmp_path, monkeypatch, capsys):
        """A broken ./fracode.json warns and uses defaults."""
        monkeypatch.chdir(tmp_path)
        (tmp_path / "fracode.json").write_text("[1, 2")
        config = load_config()
        assert config == RunConfig()
        assert "Warning" in capsys.readouterr().err
