"""
frac-ode Errors

Exception hierarchy shared by the numeric modules and the command runner.
Numerical outcomes (non-convergence, blow-up, flagged accuracy) are reported
in result objects instead.
"""

from __future__ import annotations


class FracError(Exception):
    """Base class for frac-ode errors."""


class DomainError(FracError, ValueError):
    """An argument lies outside the domain of the operation."""


class GammaPoleError(DomainError):
    """Gamma evaluated at a non-positive integer; use recip_gamma_fn."""

    def __init__(self, x: float):
        super().__init__(f"Gamma has a pole at {x!r}; use recip_gamma_fn")
        self.x = x


class GridError(FracError, ValueError):
    """Grid data is empty, too short, misaligned or has bad boundary values."""


class PreconditionError(FracError, ValueError):
    """A caller contract failed its spot check."""


class ConfigError(FracError, ValueError):
    """Invalid run configuration, tagged with the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
