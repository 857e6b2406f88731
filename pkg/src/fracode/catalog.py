"""
frac-ode Right-Hand-Side Catalog

Fixed set of named right-hand sides f(t, v) for the batch front end. Every
entry carries Lipschitz and sup-bound data on the box |v - v0| <= A so the
Picard existence horizon can be computed for it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fracode.errors import ConfigError
from fracode.solver import BoxData, FodeProblem, Rhs

logger = logging.getLogger(__name__)

# (|v0|_inf, A, lam) -> (L, M) on the box |v - v0|_inf <= A
BoxBounds = Callable[[float, float, float], tuple[float, float]]

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])
SHIFT = 0.1


@dataclass(frozen=True, eq=False)
class RhsCatalogEntry:
    """A named right-hand side; factory(lam) builds the callable."""
    name: str
    dim: int
    description: str
    factory: Callable[[float], Rhs]
    bounds: BoxBounds
    uses_lambda: bool = False

    def bind(self, lam: float = 1.0) -> Rhs:
        return self.factory(lam)

    def box_for(self, v0: np.ndarray, A: float, T: float, lam: float = 1.0) -> BoxData:
        radius = float(np.max(np.abs(v0)))
        L, M = self.bounds(radius, A, lam)
        return BoxData(A=A, L=L, M=M, T=T)

    def problem(
        self,
        gamma: float,
        v0: np.ndarray | float,
        lam: float = 1.0,
        A: float = 1.0,
        T: float = 1.0,
    ) -> FodeProblem:
        """FodeProblem for this entry with its box data attached."""
        v0 = np.atleast_1d(np.asarray(v0, dtype=float))
        if v0.size != self.dim:
            raise ConfigError(
                "v0", f"rhs {self.name!r} needs {self.dim} initial values, got {v0.size}"
            )
        return FodeProblem(gamma, self.bind(lam), v0, self.box_for(v0, A, T, lam), self.name)

    def model_dump(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "description": self.description,
            "uses_lambda": self.uses_lambda,
        }


class RhsCatalog:
    """Registry of right-hand sides by name."""

    _entries: dict[str, RhsCatalogEntry] = {}

    @classmethod
    def register(cls, entry: RhsCatalogEntry) -> None:
        if entry.name in cls._entries:
            raise ValueError(f"rhs {entry.name!r} is already registered")
        cls._entries[entry.name] = entry

    @classmethod
    def get(cls, name: str) -> RhsCatalogEntry:
        try:
            return cls._entries[name]
        except KeyError:
            known = ", ".join(sorted(cls._entries))
            raise ConfigError("rhs", f"unknown rhs {name!r} (known: {known})") from None

    @classmethod
    def names(cls) -> list[str]:
        return sorted(cls._entries)

    @classmethod
    def list_all(cls) -> list[RhsCatalogEntry]:
        return [cls._entries[name] for name in sorted(cls._entries)]

    @classmethod
    def clear(cls) -> None:
        """Clear registry (for testing)."""
        cls._entries.clear()


def get_rhs(name: str) -> RhsCatalogEntry:
    return RhsCatalog.get(name)


def _scalar(fn: Callable[[float, float], float]) -> Rhs:
    return lambda t, v: np.array([fn(t, v[0])])


def register_default_rhs() -> None:
    """
    Register the shipped entries.

    Bounds hold on |v - v0| <= A with R = |v0| + A:
    - linear families: L = |lam|, M = |lam| R (+ shift)
    - square, one_plus_square: L = 2R, M = R^2 (+ 1)
    - rotations: L = 1, M = R in the max norm
    """
    entries = [
        RhsCatalogEntry(
            "zero", 1, "f = 0",
            lambda lam: _scalar(lambda t, v: 0.0),
            lambda r, A, lam: (0.0, 0.0),
        ),
        RhsCatalogEntry(
            "identity", 1, "f = v",
            lambda lam: _scalar(lambda t, v: v),
            lambda r, A, lam: (1.0, r + A),
        ),
        RhsCatalogEntry(
            "neg_identity", 1, "f = -v",
            lambda lam: _scalar(lambda t, v: -v),
            lambda r, A, lam: (1.0, r + A),
        ),
        RhsCatalogEntry(
            "linear", 1, "f = lambda v",
            lambda lam: _scalar(lambda t, v: lam * v),
            lambda r, A, lam: (abs(lam), abs(lam) * (r + A)),
            uses_lambda=True,
        ),
        RhsCatalogEntry(
            "shifted_identity", 1, f"f = v - {SHIFT}",
            lambda lam: _scalar(lambda t, v: v - SHIFT),
            lambda r, A, lam: (1.0, r + A + SHIFT),
        ),
        RhsCatalogEntry(
            "square", 1, "f = v^2 (blows up at 1/v0 for gamma = 1)",
            lambda lam: _scalar(lambda t, v: v * v),
            lambda r, A, lam: (2.0 * (r + A), (r + A) ** 2),
        ),
        RhsCatalogEntry(
            "one_plus_square", 1, "f = 1 + v^2",
            lambda lam: _scalar(lambda t, v: 1.0 + v * v),
            lambda r, A, lam: (2.0 * (r + A), 1.0 + (r + A) ** 2),
        ),
        RhsCatalogEntry(
            "oscillator", 2, "(p, q) -> (-q, p), the closed-form oscillator",
            lambda lam: lambda t, v: np.array([-v[1], v[0]]),
            lambda r, A, lam: (1.0, r + A),
        ),
        RhsCatalogEntry(
            "hamiltonian", 2, "v -> J v with J = [[0, 1], [-1, 0]]",
            lambda lam: lambda t, v: ROTATION @ v,
            lambda r, A, lam: (1.0, r + A),
        ),
    ]
    for entry in entries:
        RhsCatalog.register(entry)
    logger.debug(f"registered {len(entries)} right-hand sides")


# Auto-register on import
register_default_rhs()
