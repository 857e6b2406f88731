"""
frac-ode Configuration System

Handles loading, validation, and defaults for run configuration.
Supports fracode.json in the working directory or ~/.fracode/config.json for
user settings; command-line flags override file values.
"""

from __future__ import annotations

import copy
import json
import logging
import sys
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from fracode.errors import ConfigError

logger = logging.getLogger(__name__)

Command = Literal["ml", "solve", "linear", "compare", "oscillator", "laplace", "suite"]
WRAPPER_KEY = "frac-ode"


class SolverConfig(BaseModel):
    """Grid and iteration settings."""
    h: float = Field(default=1.0 / 1024.0, gt=0.0, description="Grid step")
    t_end: float = Field(default=1.0, gt=0.0, description="Final time")
    tol: float = Field(default=1e-10, gt=0.0, description="Picard stopping tolerance")
    max_iter: int = Field(default=200, ge=1, description="Picard iteration cap")
    method: Literal["step", "picard"] = Field(default="step", description="Solver for 'solve'")
    endpoint: Literal["left", "right"] = Field(
        default="left",
        description="Rectangle endpoint for marching (right is implicit)",
    )
    growth_cap: float = Field(default=1e8, ge=1e6, description="Blow-up threshold on |v|")
    blowup_levels: int = Field(default=3, ge=1, description="Refinements used to bracket blow-up")
    box_radius: float = Field(default=1.0, gt=0.0, description="Picard box radius A around v0")


class MittagLefflerConfig(BaseModel):
    """Arguments for the 'ml' command."""
    alpha: float = Field(default=1.0, gt=0.0, le=2.0, description="First parameter")
    beta: float = Field(default=1.0, description="Second parameter")
    z: float = Field(default=-1.0, description="Real argument")
    tol: float = Field(default=1e-10, gt=0.0, description="Absolute tolerance")


class OutputConfig(BaseModel):
    """Output file settings."""
    path: str = Field(default="fracode-out.csv", description="Table path")
    format: Literal["csv", "json"] = Field(default="csv", description="Table format")
    reproducible: bool = Field(default=False, description="Omit timestamps")


class RunConfig(BaseModel):
    """One batch run."""
    model_config = ConfigDict(populate_by_name=True)

    command: Command = Field(default="suite", description="Experiment to run")
    gamma: float = Field(default=0.5, description="Fractional order")
    lam: float = Field(default=-1.0, alias="lambda", description="Linear coefficient")
    v0: list[float] = Field(default_factory=lambda: [1.0], description="Initial value")
    p0: float = Field(default=0.0, description="Oscillator initial p")
    q0: float = Field(default=1.0, description="Oscillator initial q")
    rhs: str = Field(default="neg_identity", description="Catalog entry for solve")
    forcing: Literal["zero", "one", "t"] = Field(default="zero", description="b(t) for linear")
    sub_v0: float = Field(default=0.5, description="Sub-solution initial value for compare")
    phi: Literal["one", "t", "relaxation"] = Field(
        default="t", description="Test function for laplace"
    )
    s: float = Field(default=30.0, gt=0.0, description="Laplace variable")
    workers: int = Field(default=4, ge=1, description="Suite worker threads")
    solver: SolverConfig = Field(default_factory=SolverConfig)
    ml: MittagLefflerConfig = Field(default_factory=MittagLefflerConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("v0", mode="before")
    @classmethod
    def _scalar_v0(cls, value: Any) -> Any:
        if isinstance(value, (int, float)):
            return [float(value)]
        return value

    @field_validator("rhs")
    @classmethod
    def _known_rhs(cls, value: str) -> str:
        from fracode.catalog import RhsCatalog

        if value not in RhsCatalog.names():
            raise ValueError(f"unknown rhs {value!r} (known: {', '.join(RhsCatalog.names())})")
        return value

    @field_validator("gamma")
    @classmethod
    def _gamma_range(cls, value: float, info: ValidationInfo) -> float:
        command = info.data.get("command", "suite")
        if command not in ("ml", "suite") and not 0.0 < value < 1.0:
            raise ValueError(f"gamma must lie in (0, 1) for {command!r}, got {value!r}")
        return value


class Config(BaseModel):
    """Top-level config wrapper."""
    model_config = ConfigDict(populate_by_name=True)
    fracode: RunConfig = Field(default_factory=RunConfig, alias=WRAPPER_KEY)


def find_config_file() -> Path | None:
    """
    Find configuration file in priority order:
    1. ./fracode.json (working directory)
    2. ~/.fracode/config.json (user global)
    3. None (use defaults)
    """
    workspace_config = Path("fracode.json")
    if workspace_config.exists():
        return workspace_config

    home_config = Path.home() / ".fracode" / "config.json"
    if home_config.exists():
        return home_config

    return None


def _unwrap(data: Any) -> dict:
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    if WRAPPER_KEY in data:
        inner = data[WRAPPER_KEY]
        if not isinstance(inner, dict):
            raise ValueError(f"{WRAPPER_KEY!r} must hold a JSON object")
        return inner
    return data


def _read_data(path: Path) -> dict:
    with open(path) as f:
        return _unwrap(json.load(f))


def apply_overrides(data: dict, overrides: dict[str, Any]) -> dict:
    """Copy of data with dotted keys ("solver.h") set from overrides; None values skipped."""
    merged = copy.deepcopy(data)
    for key, value in overrides.items():
        if value is None:
            continue
        target = merged
        *parents, leaf = key.split(".")
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = value
    return merged


def describe_validation_error(error: ValidationError) -> tuple[str, str]:
    """(field, message) for the first offending field."""
    first = error.errors()[0]
    field = ".".join(str(part) for part in first.get("loc", ())) or "config"
    return field, first.get("msg", "invalid value")


def load_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """
    Load run configuration.

    An explicit path must parse; a discovered file that fails to load falls
    back to defaults with a warning on stderr.

    Raises:
        ConfigError: explicit file unreadable or the merged values are invalid
    """
    data: dict = {}
    if path is not None:
        try:
            data = _read_data(Path(path))
        except (OSError, ValueError) as e:
            raise ConfigError("config", f"cannot load {path}: {e}") from e
    else:
        found = find_config_file()
        if found is not None:
            try:
                data = _read_data(found)
            except (OSError, ValueError) as e:
                print(f"Warning: Failed to load config from {found}: {e}", file=sys.stderr)
                print("Using default configuration.", file=sys.stderr)
                data = {}

    merged = apply_overrides(data, overrides or {})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        field, message = describe_validation_error(e)
        raise ConfigError(field, message) from e


def save_config(config: RunConfig, path: Path | None = None) -> Path:
    """
    Save configuration to file in the wrapped layout.

    Args:
        config: Configuration to save
        path: Target path (defaults to ./fracode.json)

    Returns:
        Path where config was saved
    """
    if path is None:
        path = Path("fracode.json")

    wrapped = Config(fracode=config)

    with open(path, "w") as f:
        json.dump(wrapped.model_dump(by_alias=True), f, indent=2)

    return path
