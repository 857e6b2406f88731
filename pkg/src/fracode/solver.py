"""
frac-ode Fractional ODE Solver

Solves D^gamma v = f(t, v), v(0) = v0 through the equivalent Volterra form
v = v0 + J_gamma f(., v): Picard iteration, product-rectangle marching, the
Mittag-Leffler closed form of the linear equation, the Picard existence
horizon and blow-up bracketing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.optimize import bisect

from fracode.errors import DomainError, PreconditionError
from fracode.fraccalc import GridFunction, causal_convolve, power_differences, uniform_times
from fracode.special import MLParams, mittag_leffler, recip_gamma_fn

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]
Endpoint = Literal["left", "right"]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
DEFAULT_GROWTH_CAP = 1e8
IMPLICIT_MAX_ITER = 500


# =============================================================================
# Problem and report types
# =============================================================================

@dataclass(frozen=True)
class BoxData:
    """Picard box: radius A around v0, Lipschitz L, sup bound M, window T."""
    A: float
    L: float
    M: float
    T: float

    def __post_init__(self) -> None:
        if not (self.A > 0 and self.T > 0 and self.L >= 0 and self.M >= 0):
            raise DomainError(f"box needs A, T > 0 and L, M >= 0, got {self.model_dump()}")

    def model_dump(self) -> dict:
        return {"A": self.A, "L": self.L, "M": self.M, "T": self.T}


@dataclass(frozen=True, eq=False)
class FodeProblem:
    """
    D^gamma v = rhs(t, v), v(0) = v0, componentwise for vector v.

    gamma = 1 is accepted and reduces every scheme to its classical counterpart.
    The rhs must be a pure function of its arguments.
    """
    gamma: float
    rhs: Rhs
    v0: np.ndarray
    box: BoxData | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and 0.0 < self.gamma <= 1.0):
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        v0 = np.atleast_1d(np.array(self.v0, dtype=float))
        if v0.ndim != 1 or v0.size < 1:
            raise DomainError(f"v0 must be a scalar or vector, got shape {v0.shape}")
        v0.setflags(write=False)
        object.__setattr__(self, "v0", v0)

    @property
    def dim(self) -> int:
        return self.v0.size

    @classmethod
    def scalar(
        cls,
        gamma: float,
        f: Callable[[float, float], float],
        v0: float,
        box: BoxData | None = None,
        name: str = "custom",
    ) -> FodeProblem:
        """Wrap a scalar right-hand side f(t, v) -> float."""
        return cls(gamma, lambda t, v: np.array([f(t, v[0])]), np.array([v0]), box, name)

    def evaluate(self, t: float, v: np.ndarray) -> np.ndarray:
        """rhs(t, v) as a float vector; non-finite on overflow."""
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                out = np.asarray(self.rhs(t, v), dtype=float).reshape(self.dim)
        except (OverflowError, FloatingPointError):
            out = np.full(self.dim, np.inf)
        return out


@dataclass(eq=False)
class SolveReport:
    """Outcome of a solve on a uniform grid, possibly truncated at blow-up."""
    values: np.ndarray
    h: float
    converged: bool
    max_residual: float
    method: str
    t0: float = 0.0
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    horizon_T1: float | None = None
    picard_iters: int | None = None
    blowup: tuple[float, float] | None = None
    blowup_suspected: bool = False
    t_end: float = 0.0
    error: str | None = None

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.values.shape[0], dtype=float)

    @property
    def solution(self) -> list[GridFunction]:
        """One GridFunction per component; empty if fewer than 2 nodes survived."""
        if self.values.shape[0] < 2:
            return []
        return [
            GridFunction(self.values[:, i], self.h, self.t0) for i in range(self.values.shape[1])
        ]

    def component(self, i: int = 0) -> GridFunction:
        return self.solution[i]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def reached_end(self) -> bool:
        return self.final_time >= self.t_end - 1e-9 * max(1.0, self.t_end)

    def model_dump(self) -> dict:
        return {
            "method": self.method,
            "h": self.h,
            "nodes": int(self.values.shape[0]),
            "final_time": self.final_time,
            "converged": self.converged,
            "max_residual": self.max_residual,
            "horizon_T1": self.horizon_T1,
            "picard_iters": self.picard_iters,
            "blowup": list(self.blowup) if self.blowup else None,
            "blowup_suspected": self.blowup_suspected,
            "error": self.error,
        }


@dataclass(frozen=True)
class BlowupLevel:
    """Bracket found at one step size, raw and intersected with coarser levels."""
    h: float
    raw_low: float
    raw_high: float
    low: float
    high: float

    def model_dump(self) -> dict:
        return {
            "h": self.h,
            "raw_low": self.raw_low,
            "raw_high": self.raw_high,
            "low": self.low,
            "high": self.high,
        }


@dataclass(frozen=True)
class BlowupReport:
    """Nested bracket [low, high] for the blow-up time."""
    low: float
    high: float
    levels: tuple[BlowupLevel, ...]

    @property
    def bracket(self) -> tuple[float, float]:
        return self.low, self.high

    @property
    def width(self) -> float:
        return self.high - self.low

    def model_dump(self) -> dict:
        return {
            "low": self.low,
            "high": self.high,
            "levels": [level.model_dump() for level in self.levels],
        }


# =============================================================================
# Shared discretization
# =============================================================================

def rectangle_weights(gamma: float, n: int, h: float) -> np.ndarray:
    """W[m] = h^gamma/Gamma(gamma+1) * (m^gamma - (m-1)^gamma), W[0] = 0."""
    return power_differences(gamma, n) * (h ** gamma * recip_gamma_fn(gamma + 1.0))


def _integrate_columns(weights: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Left-rectangle J applied to every column of F (rows are nodes)."""
    n = F.shape[0]
    return np.column_stack([np.convolve(F[:, i], weights[:n])[:n] for i in range(F.shape[1])])


def volterra_residual(p: FodeProblem, values: np.ndarray, F: np.ndarray, h: float) -> np.ndarray:
    """Per-node max over components of |v_n - v0 - (J_gamma f(., v))_n|."""
    weights = rectangle_weights(p.gamma, values.shape[0] - 1, h)
    integral = _integrate_columns(weights, F)
    return np.max(np.abs(values - p.v0 - integral), axis=1)


def _exceeds(v: np.ndarray, growth_cap: float) -> bool:
    return not np.all(np.isfinite(v)) or float(np.max(np.abs(v))) > growth_cap


# =============================================================================
# Existence horizon
# =============================================================================

def existence_horizon(p: FodeProblem) -> float:
    """
    Picard horizon T1 = min{T, sup{t : (M/Gamma(1+gamma)) t^gamma E_gamma(L t^gamma) <= A}}.
    """
    if p.box is None:
        raise PreconditionError("existence_horizon needs box data (A, L, M, T)")
    box = p.box
    if box.M == 0.0:
        return box.T

    gamma = p.gamma
    scale = box.M * recip_gamma_fn(1.0 + gamma)

    def growth(t: float) -> float:
        tg = t ** gamma
        factor = 1.0 if box.L == 0.0 else mittag_leffler(MLParams(gamma, 1.0, box.L * tg))[0]
        return scale * tg * factor - box.A

    if growth(box.T) <= 0.0:
        return box.T
    horizon = bisect(growth, 0.0, box.T, xtol=1e-15, rtol=1e-12, maxiter=200)
    logger.debug(f"existence horizon for {p.name}: {horizon!r}")
    return float(horizon)


# =============================================================================
# Marching
# =============================================================================

def _implicit_value(
    p: FodeProblem, t: float, base: np.ndarray, w1: float, start: np.ndarray, growth_cap: float
) -> np.ndarray | None:
    """Fixed point of v = base + w1 * f(t, v), iterated from start; None on failure."""
    v = start
    for _ in range(IMPLICIT_MAX_ITER):
        nxt = base + w1 * p.evaluate(t, v)
        if _exceeds(nxt, growth_cap):
            return None
        if float(np.max(np.abs(nxt - v))) <= 1e-14 * (1.0 + float(np.max(np.abs(nxt)))):
            return nxt
        v = nxt
    return None


def step_solve(
    p: FodeProblem,
    h: float,
    t_end: float,
    endpoint: Endpoint = "left",
    growth_cap: float = DEFAULT_GROWTH_CAP,
) -> SolveReport:
    """
    Product-rectangle marching of v_n = v0 + sum_{j<n} W[n-j] f(t_j, v_j).

    endpoint="right" uses f at the right end of each cell, which makes each
    step implicit; it is solved by fixed-point iteration. The march stops at
    the first non-finite value or |v| > growth_cap and reports the bracket
    (last accepted time, first rejected time).
    """
    if endpoint not in ("left", "right"):
        raise DomainError(f"endpoint must be 'left' or 'right', got {endpoint!r}")
    times = uniform_times(h, t_end)
    n_steps = times.size - 1
    weights = rectangle_weights(p.gamma, n_steps, h)

    V = np.empty((n_steps + 1, p.dim))
    F = np.empty((n_steps + 1, p.dim))
    V[0] = p.v0
    F[0] = p.evaluate(0.0, p.v0)
    blowup: tuple[float, float] | None = None
    last = 0

    if _exceeds(F[0], growth_cap):
        blowup = (0.0, float(times[1]))
    else:
        for n in range(1, n_steps + 1):
            t = float(times[n])
            if endpoint == "left":
                v = p.v0 + weights[n:0:-1] @ F[:n]
            else:
                base = p.v0 + weights[n:1:-1] @ F[1:n]
                predictor = p.v0 + weights[n:0:-1] @ F[:n]
                v = _implicit_value(p, t, base, float(weights[1]), predictor, growth_cap)
            if v is None or _exceeds(v, growth_cap):
                blowup = (float(times[n - 1]), t)
                break
            f_n = p.evaluate(t, v)
            if _exceeds(f_n, math.inf):
                blowup = (float(times[n - 1]), t)
                break
            V[n] = v
            F[n] = f_n
            last = n

    V = V[: last + 1]
    F = F[: last + 1]
    if endpoint == "left":
        residual = volterra_residual(p, V, F, h)
    else:
        residual = _right_residual(p, V, F, h)
    report = SolveReport(
        values=V,
        h=h,
        converged=blowup is None,
        max_residual=float(np.max(residual)),
        method=f"step-{endpoint}",
        residual=residual,
        horizon_T1=existence_horizon(p) if p.box is not None else None,
        blowup=blowup,
        blowup_suspected=blowup is not None,
        t_end=t_end,
    )
    if blowup is not None:
        logger.info(
            f"{p.name}: march ({endpoint}) exceeded cap between {blowup[0]} and {blowup[1]}"
        )
    else:
        logger.info(f"{p.name}: march ({endpoint}) reached t={t_end} with h={h}")
    return report


def _right_residual(p: FodeProblem, V: np.ndarray, F: np.ndarray, h: float) -> np.ndarray:
    """Residual of the right-endpoint rule v_n - v0 - sum_j W[n-j] f_{j+1}."""
    n = V.shape[0]
    weights = rectangle_weights(p.gamma, n - 1, h)
    shifted = np.vstack([F[1:], np.zeros((1, p.dim))])
    # W[0] = 0, so row n of the convolution is sum_{j<n} W[n-j] f_{j+1}
    integral = _integrate_columns(weights, shifted)
    return np.max(np.abs(V - p.v0 - integral), axis=1)


# =============================================================================
# Picard iteration
# =============================================================================

def picard_solve(
    p: FodeProblem,
    h: float,
    t_end: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: np.ndarray | float | None = None,
) -> SolveReport:
    """
    Iterate v^k = v0 + J_gamma f(., v^{k-1}) on the grid until successive
    iterates differ by at most tol in max norm.

    Args:
        p: Problem
        h: Step
        t_end: Final time; must not exceed the existence horizon when p has a box
        tol: Stopping tolerance on successive iterates
        max_iter: Iteration cap
        initial: Starting iterate, broadcast to (nodes, dim); defaults to v0

    Returns:
        SolveReport with picard_iters set; converged is False on the cap or on
        non-finite rhs values (then the last finite iterate is returned)
    """
    if not (h > 0 and tol > 0 and max_iter >= 1):
        raise DomainError(f"need h > 0, tol > 0, max_iter >= 1, got {h!r}, {tol!r}, {max_iter!r}")
    horizon = None
    if p.box is not None:
        horizon = existence_horizon(p)
        if t_end > horizon * (1.0 + 1e-12):
            raise PreconditionError(f"t_end={t_end!r} exceeds the existence horizon {horizon!r}")

    times = uniform_times(h, t_end)
    weights = rectangle_weights(p.gamma, times.size - 1, h)
    if initial is None:
        V = np.tile(p.v0, (times.size, 1))
    else:
        V = np.broadcast_to(np.asarray(initial, dtype=float), (times.size, p.dim)).copy()

    converged = False
    suspected = False
    iterations = 0
    F = np.array([p.evaluate(float(t), V[k]) for k, t in enumerate(times)])
    for iterations in range(1, max_iter + 1):
        if not np.all(np.isfinite(F)):
            suspected = True
            break
        nxt = p.v0 + _integrate_columns(weights, F)
        delta = float(np.max(np.abs(nxt - V)))
        V = nxt
        F = np.array([p.evaluate(float(t), V[k]) for k, t in enumerate(times)])
        logger.debug(f"{p.name}: Picard sweep {iterations}, update {delta:.3e}")
        if delta <= tol:
            converged = True
            break

    error = None
    if suspected:
        error = "non-finite rhs values during Picard iteration"
        F = np.nan_to_num(F, nan=0.0, posinf=0.0, neginf=0.0)
    elif not converged:
        error = f"no convergence after {max_iter} iterations"
        logger.warning(f"{p.name}: {error}")
    residual = volterra_residual(p, V, F, h)
    return SolveReport(
        values=V,
        h=h,
        converged=converged,
        max_residual=float(np.max(residual)),
        method="picard",
        residual=residual,
        horizon_T1=horizon,
        picard_iters=iterations,
        blowup_suspected=suspected,
        t_end=t_end,
        error=error,
    )


# =============================================================================
# Closed form of the linear equation
# =============================================================================

def _cell_moments(gamma: float, n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Exact integrals of s^(gamma-1) times the two linear hat pieces on each cell
    [m h, (m+1) h]: (left-node weight, right-node weight) for m = 0..n-1.
    """
    m = np.arange(n + 1, dtype=float)
    p0 = np.diff(m ** gamma) * (h ** gamma / gamma)
    p1 = np.diff(m ** (gamma + 1.0)) * (h ** gamma / (gamma + 1.0))
    left = (m[1:]) * p0 - p1
    right = p1 - m[:-1] * p0
    return left, right


def solve_linear(gamma: float, lam: float, b: GridFunction, v0: float) -> GridFunction:
    """
    v(t) = v0 e(t) + (1/lam) int_0^t b(t-s) e'(s) ds, e(t) = E_gamma(lam t^gamma).

    e'(s) = lam s^(gamma-1) E_{gamma,gamma}(lam s^gamma); the integral is taken
    with b(t-s) E_{gamma,gamma}(lam s^gamma) piecewise linear against the exact
    moments of s^(gamma-1).

    Raises:
        DomainError: lam == 0 (then v = v0 + J_gamma b, see frac_integral)
    """
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma!r}")
    if lam == 0.0:
        raise DomainError("lambda = 0 has no Mittag-Leffler form; use v0 + frac_integral(gamma, b)")
    n = b.n_steps
    h = b.h
    s = b.times - b.t0
    sg = s ** gamma
    relaxation = np.array([mittag_leffler(MLParams(gamma, 1.0, lam * x))[0] for x in sg])
    kernel = np.array([mittag_leffler(MLParams(gamma, gamma, lam * x))[0] for x in sg])

    left, right = _cell_moments(gamma, n + 1, h)
    # node m collects left[m] from cell m and right[m-1] from cell m-1
    combined = left.copy()
    combined[1:] += right[:-1]
    convolution = causal_convolve(kernel * combined, b.values, n + 1)
    # at node n the cell [t_n, t_{n+1}] lies outside [0, t_n]
    values = v0 * relaxation + convolution - kernel * left * b.values[0]
    return b.with_values(values)


# =============================================================================
# Blow-up
# =============================================================================

def detect_blowup(
    p: FodeProblem,
    h0: float,
    growth_cap: float = DEFAULT_GROWTH_CAP,
    t_end: float | None = None,
    levels: int = 3,
) -> BlowupReport | None:
    """
    Bracket the blow-up time by marching at h0, h0/2, ... .

    At each level the implicit right-endpoint march gives the low end (its last
    accepted time) and the explicit march gives the high end (its first time
    over the cap). Each level's bracket is intersected with the coarser ones,
    so the reported brackets nest.

    Returns:
        BlowupReport, or None if the explicit march stays below the cap up to
        t_end at every level
    """
    if growth_cap < 1e6:
        raise DomainError(f"growth_cap must be at least 1e6, got {growth_cap!r}")
    if levels < 1:
        raise DomainError(f"levels must be positive, got {levels!r}")
    if t_end is None:
        t_end = p.box.T if p.box is not None else 10.0

    found: list[BlowupLevel] = []
    low, high = -math.inf, math.inf
    for k in range(levels):
        h = h0 / 2 ** k
        explicit = step_solve(p, h, t_end, endpoint="left", growth_cap=growth_cap)
        if explicit.blowup is None:
            logger.info(f"{p.name}: no blow-up before t={t_end} at h={h}")
            continue
        implicit = step_solve(p, h, t_end, endpoint="right", growth_cap=growth_cap)
        raw_high = explicit.blowup[1]
        raw_low = explicit.blowup[0]
        if implicit.blowup is not None:
            raw_low = min(raw_low, implicit.blowup[0])
        low = max(low, raw_low)
        high = min(high, raw_high)
        if low > high:
            logger.warning(f"{p.name}: brackets at h={h} do not overlap; keeping the raw bracket")
            low, high = raw_low, raw_high
        found.append(BlowupLevel(h, raw_low, raw_high, low, high))
        logger.info(f"{p.name}: blow-up bracket [{low}, {high}] at h={h}")

    if not found:
        return None
    return BlowupReport(low=found[-1].low, high=found[-1].high, levels=tuple(found))
