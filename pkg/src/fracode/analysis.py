"""
frac-ode Analysis Checks

Executable checks of the order and energy statements for fractional ODEs:
comparison (Groenwall) principle, monotone growth, energy dissipation for
gradient flows and Hamiltonian systems, the fractional oscillator closed
form with its decay exponent, and the Laplace transform rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from fracode.errors import DomainError, GridError, PreconditionError
from fracode.fraccalc import GridFunction, caputo_derivative, frac_integral
from fracode.solver import FodeProblem, SolveReport, step_solve
from fracode.special import mittag_leffler_values

logger = logging.getLogger(__name__)

ScalarRhs = Callable[[float, float], float]
DissipationMode = Literal["gradient_flow", "hamiltonian"]

# D^gamma p = -q, D^gamma q = p; generates the closed-form oscillator below
OSCILLATOR_STRUCTURE = np.array([[0.0, -1.0], [1.0, 0.0]])
LAPLACE_MIN_DECAY = 25.0


# =============================================================================
# Comparison principle
# =============================================================================

@dataclass(frozen=True, eq=False)
class ComparisonCase:
    """Sub-solution v1 against the solution v2 of sup_problem, same rhs."""
    gamma: float
    rhs: ScalarRhs
    sub_solution: GridFunction
    sup_problem: FodeProblem


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    holds: bool
    max_violation: float
    tolerance: float
    compared_until: float
    upper: SolveReport | None = None

    def model_dump(self) -> dict:
        return {
            "holds": self.holds,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "compared_until": self.compared_until,
        }


def _spot_check_monotone(f: ScalarRhs, times: np.ndarray, low: float, high: float) -> None:
    """Sampled check that v <= w implies f(t, v) <= f(t, w)."""
    if not high > low:
        high = low + 1.0
    levels = np.linspace(low, high, 9)
    for t in times[:: max(1, times.size // 8)]:
        samples = [f(float(t), float(v)) for v in levels]
        slack = 1e-12 * (1.0 + max(abs(x) for x in samples))
        if any(b < a - slack for a, b in zip(samples, samples[1:])):
            raise PreconditionError(f"rhs is not nondecreasing in v at t={float(t)!r}")


def check_comparison(c: ComparisonCase, t_end: float, h: float) -> ComparisonResult:
    """
    Check v1 <= v2 + tol on the grid, tol = 10 h (1 + max|v2|).

    v1 must satisfy the integrated sub-solution inequality
    v1 <= v1(0) + J_gamma f(., v1) within 10 h (1 + max|v1|).
    When v2 blows up, the comparison runs up to the last accepted node.
    """
    sub = c.sub_solution
    if abs(sub.h - h) > 1e-12 * h or abs(sub.t_end - t_end) > 1e-9 * max(1.0, t_end):
        raise GridError("sub_solution must live on the grid (h, t_end)")
    if c.sup_problem.dim != 1:
        raise DomainError("comparison is defined for scalar problems")
    if c.sup_problem.v0[0] < sub.values[0]:
        raise PreconditionError("initial data must satisfy v2(0) >= v1(0)")

    times = sub.times
    _spot_check_monotone(c.rhs, times, float(np.min(sub.values)), float(np.max(sub.values)))

    forcing = sub.with_values(
        np.array([c.rhs(float(t), float(v)) for t, v in zip(times, sub.values)])
    )
    bound = sub.values[0] + frac_integral(c.gamma, forcing).values
    sub_tol = 10.0 * h * (1.0 + float(np.max(np.abs(sub.values))))
    excess = float(np.max(sub.values - bound))
    if excess > sub_tol:
        raise PreconditionError(
            f"sub-solution inequality fails by {excess:.3e} (tolerance {sub_tol:.3e})"
        )

    report = step_solve(c.sup_problem, h, t_end)
    v2 = report.values[:, 0]
    v1 = sub.values[: v2.size]
    tol = 10.0 * h * (1.0 + float(np.max(np.abs(v2))))
    gap = v1 - v2
    violation = max(float(np.max(gap)), 0.0)
    result = ComparisonResult(
        holds=bool(np.all(gap <= tol)),
        max_violation=violation,
        tolerance=tol,
        compared_until=float(times[v2.size - 1]),
        upper=report,
    )
    logger.debug(f"comparison: {result.model_dump()}")
    return result


def check_monotone_growth(
    gamma: float, f: ScalarRhs, v0: float, t_end: float, h: float
) -> bool:
    """
    True iff the marched solution is nondecreasing within 10 h per step.

    Requires f nondecreasing in v, f(t, 0) >= 0 and v0 >= 0 (spot-checked).
    After blow-up only the surviving nodes are inspected.
    """
    if v0 < 0.0:
        raise PreconditionError(f"v0 must be nonnegative, got {v0!r}")
    sample_times = np.linspace(0.0, t_end, 9)
    if any(f(float(t), 0.0) < 0.0 for t in sample_times):
        raise PreconditionError("f(t, 0) must be nonnegative")
    _spot_check_monotone(f, sample_times, 0.0, max(1.0, 2.0 * v0))

    report = step_solve(FodeProblem.scalar(gamma, f, v0, name="monotone"), h, t_end)
    steps = np.diff(report.values[:, 0])
    return bool(np.all(steps >= -10.0 * h))


# =============================================================================
# Energy dissipation
# =============================================================================

@dataclass(frozen=True, eq=False)
class DissipationResult:
    holds: bool
    energy: GridFunction
    tolerance: float
    max_excess: float

    def model_dump(self) -> dict:
        return {
            "holds": self.holds,
            "tolerance": self.tolerance,
            "max_excess": self.max_excess,
            "final_energy": float(self.energy.values[-1]),
        }


def half_square(v: np.ndarray) -> float:
    return 0.5 * float(np.dot(v, v))


def check_dissipation(
    gamma: float,
    grad_E: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray | float,
    t_end: float,
    h: float,
    mode: DissipationMode = "gradient_flow",
    structure: np.ndarray | None = None,
    energy_fn: Callable[[np.ndarray], float] = half_square,
) -> DissipationResult:
    """
    Solve D^gamma v = -grad E(v) (gradient_flow) or D^gamma v = S grad E(v)
    (hamiltonian, S antisymmetric) and check E(v(t_n)) <= E(v0) + 10 h (1 + E(v0)).

    Monotone decrease is not asserted. On blow-up the surviving grid is used.
    """
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    if mode == "gradient_flow":
        def rhs(t: float, v: np.ndarray) -> np.ndarray:
            return -np.asarray(grad_E(v), dtype=float)
    elif mode == "hamiltonian":
        if structure is None:
            raise PreconditionError("hamiltonian mode needs a structure matrix")
        S = np.asarray(structure, dtype=float)
        if S.shape != (v0.size, v0.size) or not np.allclose(S, -S.T, atol=0.0, rtol=0.0):
            raise PreconditionError("structure matrix must be square and antisymmetric")

        def rhs(t: float, v: np.ndarray) -> np.ndarray:
            return S @ np.asarray(grad_E(v), dtype=float)
    else:
        raise DomainError(f"unknown mode {mode!r}")

    report = step_solve(FodeProblem(gamma, rhs, v0, name=mode), h, t_end)
    energies = np.array([energy_fn(v) for v in report.values])
    if energies.size < 2:
        energies = np.append(energies, energies[-1])
    e0 = energy_fn(v0)
    tol = 10.0 * h * (1.0 + e0)
    excess = float(np.max(energies - e0))
    return DissipationResult(
        holds=bool(excess <= tol),
        energy=GridFunction(energies, h),
        tolerance=tol,
        max_excess=excess,
    )


# =============================================================================
# Fractional oscillator
# =============================================================================

@dataclass(frozen=True, eq=False)
class HamiltonianState:
    """Oscillator trajectory with E = (p^2 + q^2)/2."""
    p: GridFunction
    q: GridFunction
    energy: GridFunction

    def model_dump(self) -> dict:
        return {
            "times": self.p.times.tolist(),
            "p": self.p.values.tolist(),
            "q": self.q.values.tolist(),
            "energy": self.energy.values.tolist(),
        }


def oscillator_closed_form(
    gamma: float, p0: float, q0: float, grid: GridFunction
) -> HamiltonianState:
    """
    Closed-form oscillator on the nodes of grid (its values are ignored):

        beta(t)   = E_{2 gamma}(-t^{2 gamma})
        Jbeta(t)  = t^gamma E_{2 gamma, gamma+1}(-t^{2 gamma})
        p = p0 beta - q0 Jbeta,  q = q0 beta + p0 Jbeta
        E(t) = E(0) (beta^2 + Jbeta^2)
    """
    if not 0.0 < gamma <= 0.5:
        raise DomainError(f"closed form needs gamma in (0, 0.5], got {gamma!r}")
    times = grid.times
    alpha = 2.0 * gamma
    z = -(times ** alpha)
    beta = mittag_leffler_values(alpha, 1.0, z)
    jbeta = times ** gamma * mittag_leffler_values(alpha, gamma + 1.0, z)
    p = p0 * beta - q0 * jbeta
    q = q0 * beta + p0 * jbeta
    e0 = 0.5 * (p0 * p0 + q0 * q0)
    energy = e0 * (beta * beta + jbeta * jbeta)
    return HamiltonianState(grid.with_values(p), grid.with_values(q), grid.with_values(energy))


def oscillator_simulate(
    gamma: float, p0: float, q0: float, h: float, t_end: float
) -> HamiltonianState:
    """March the oscillator system directly; valid for any gamma in (0, 1]."""
    problem = FodeProblem(
        gamma, lambda t, v: OSCILLATOR_STRUCTURE @ v, np.array([p0, q0]), name="oscillator"
    )
    report = step_solve(problem, h, t_end)
    p, q = report.values[:, 0], report.values[:, 1]
    energy = 0.5 * (p * p + q * q)
    return HamiltonianState(GridFunction(p, h), GridFunction(q, h), GridFunction(energy, h))


def fit_decay_exponent(
    energy: GridFunction, t_lo: float, t_hi: float, samples: int = 64
) -> float:
    """Least-squares slope of log E against log t on log-spaced nodes in [t_lo, t_hi]."""
    if t_lo < 10.0 or t_hi <= t_lo:
        raise DomainError(f"fit window must satisfy 10 <= t_lo < t_hi, got [{t_lo!r}, {t_hi!r}]")
    if t_hi > energy.t_end + 1e-9 * energy.t_end:
        raise GridError(f"fit window ends at {t_hi!r}, beyond the grid end {energy.t_end!r}")
    targets = np.geomspace(t_lo, t_hi, samples)
    nodes = np.unique(np.rint((targets - energy.t0) / energy.h).astype(int))
    nodes = nodes[(nodes >= 0) & (nodes <= energy.n_steps)]
    if nodes.size < 2:
        raise GridError("fit window holds fewer than 2 grid nodes")
    times = energy.times[nodes]
    values = energy.values[nodes]
    if np.any(values <= 0.0):
        raise PreconditionError("energy must be strictly positive on the fit window")
    slope = np.polyfit(np.log(times), np.log(values), 1)[0]
    logger.debug(f"decay fit over {nodes.size} nodes in [{t_lo}, {t_hi}]: slope {slope:.6f}")
    return float(slope)


# =============================================================================
# Laplace transform rule
# =============================================================================

@dataclass(frozen=True)
class LaplaceResult:
    lhs: float
    rhs: float

    @property
    def relative_gap(self) -> float:
        return abs(self.lhs - self.rhs) / (abs(self.rhs) + 1e-30)

    def model_dump(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "relative_gap": self.relative_gap}


def laplace_check(gamma: float, phi: GridFunction, s: float) -> LaplaceResult:
    """
    Both sides of L(D^gamma phi)(s) = s^gamma L(phi)(s) - phi(0+) s^(gamma-1).

    Transforms are trapezoid sums over the grid plus the analytic tail of the
    data extended by its last value; the right side is assembled as
    s^gamma L(phi - phi(0+)) so a constant gives exactly 0 on both sides.
    """
    if not s > 0.0:
        raise DomainError(f"s must be positive, got {s!r}")
    t_end = phi.t_end
    if s * t_end < LAPLACE_MIN_DECAY:
        raise DomainError(f"s * t_end = {s * t_end!r} < {LAPLACE_MIN_DECAY}: truncation unsound")
    times = phi.times
    decay = np.exp(-s * times)
    tail = math.exp(-s * t_end) / s

    regular = caputo_derivative(gamma, phi).regular.values
    lhs = float(np.trapezoid(decay * regular, times)) + regular[-1] * tail

    shifted = phi.values - phi.values[0]
    transform = float(np.trapezoid(decay * shifted, times)) + shifted[-1] * tail
    rhs = s ** gamma * transform
    return LaplaceResult(lhs=lhs, rhs=rhs)
