"""
frac-ode Acceptance Suite

Self-check of the toolkit: each criterion measures one property (golden
values, group law, solver accuracy, horizon, blow-up, comparison, energy
decay, Laplace rule, duality) against its bound.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np

from fracode.analysis import (
    ComparisonCase,
    check_comparison,
    check_dissipation,
    fit_decay_exponent,
    laplace_check,
    oscillator_closed_form,
)
from fracode.catalog import ROTATION
from fracode.fraccalc import (
    GridFunction,
    caputo_derivative,
    caputo_holder_form,
    compose_check,
    duality_gap,
    fundamental_theorem_error,
)
from fracode.solver import (
    BoxData,
    FodeProblem,
    detect_blowup,
    existence_horizon,
    picard_solve,
    step_solve,
)
from fracode.special import MLParams, mittag_leffler, mittag_leffler_values

logger = logging.getLogger(__name__)

Status = Literal["PASS", "FAIL"]
SUITE_SEED = 20240611


@dataclass
class CriterionResult:
    """Result of one acceptance criterion; the runner fills in name."""
    status: Status
    measured: float
    bound: float
    message: str
    details: dict[str, Any] = field(default_factory=dict)
    name: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def model_dump(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "bound": self.bound,
            "message": self.message,
            "details": self.details,
        }


def _verdict(ok: bool) -> Status:
    return "PASS" if ok else "FAIL"


def _sample(fn: Callable[[float], float], h: float, t_end: float = 1.0) -> GridFunction:
    return GridFunction.from_callable(fn, h, t_end)


# =============================================================================
# Criteria
# =============================================================================

def check_ml_goldens() -> CriterionResult:
    """E_{1,1}(z) = exp(z), E_{2,1}(-t^2) = cos t, t E_{2,2}(-t^2) = sin t."""
    errors = {}
    z = np.linspace(-30.0, 5.0, 100)
    errors["exp"] = max(
        abs(mittag_leffler(MLParams(1.0, 1.0, x))[0] - math.exp(x)) for x in z
    )
    t = np.linspace(0.0, 10.0, 100)
    errors["cos"] = max(abs(mittag_leffler(MLParams(2.0, 1.0, -x * x))[0] - math.cos(x)) for x in t)
    t = np.linspace(0.1, 10.0, 100)
    errors["sin"] = max(
        abs(x * mittag_leffler(MLParams(2.0, 2.0, -x * x))[0] - math.sin(x)) for x in t
    )
    worst = max(errors.values())
    return CriterionResult(
        status=_verdict(worst <= 1e-10),
        measured=worst,
        bound=1e-10,
        message=f"max error over 3 x 100 samples: {worst:.3e}",
        details=errors,
    )


def check_semigroup() -> CriterionResult:
    """J_0.3 J_0.3 f against J_0.6 f on [T/8, T] at h = 1/512 and 1/1024."""
    bound = 0.01
    functions = {"one": lambda t: 1.0, "t": lambda t: t, "t2": lambda t: t * t}
    worst_error = 0.0
    worst_order = math.inf
    details = {}
    for name, fn in functions.items():
        coarse = compose_check(0.3, 0.3, _sample(fn, 1.0 / 512.0), t_min=0.125)
        fine = compose_check(0.3, 0.3, _sample(fn, 1.0 / 1024.0), t_min=0.125)
        order = math.log2(coarse / fine) if fine > 0.0 else math.inf
        details[name] = {"error_coarse": coarse, "error_fine": fine, "order": order}
        worst_error = max(worst_error, coarse, fine)
        worst_order = min(worst_order, order)
    return CriterionResult(
        status=_verdict(worst_error <= bound and worst_order >= 0.9),
        measured=worst_error,
        bound=bound,
        message=f"max error {worst_error:.3e}, min observed order {worst_order:.3f} (need >= 0.9)",
        details=details,
    )


def check_fundamental_theorem() -> CriterionResult:
    """||J(D phi) + phi(0+) - phi|| <= 0.02 ||phi|| at h = 1/1024."""
    h = 1.0 / 1024.0
    functions = {"t": lambda t: t, "t2": lambda t: t * t, "sin": math.sin}
    worst = 0.0
    details = {}
    for name, fn in functions.items():
        phi = _sample(fn, h)
        norm = float(np.max(np.abs(phi.values)))
        for gamma in (0.3, 0.5, 0.7):
            ratio = fundamental_theorem_error(gamma, phi) / norm
            details[f"{name}@{gamma}"] = ratio
            worst = max(worst, ratio)
    logger.info(f"fundamental theorem: error <= C h ||phi|| with C = {worst / h:.4f}")
    return CriterionResult(
        status=_verdict(worst <= 0.02),
        measured=worst,
        bound=0.02,
        message=f"worst relative reconstruction error {worst:.3e}",
        details=details,
    )


def check_constant_annihilation() -> CriterionResult:
    """Caputo derivative of constants is bitwise zero in both forms."""
    rng = np.random.default_rng(SUITE_SEED)
    nonzero = 0
    for _ in range(20):
        constant = float(rng.uniform(-10.0, 10.0))
        gamma = float(rng.uniform(0.05, 0.95))
        h = 1.0 / float(rng.choice([64, 128, 256, 512, 1024]))
        phi = GridFunction(np.full(round(1.0 / h) + 1, constant), h)
        regular = caputo_derivative(gamma, phi).regular.values
        holder = caputo_holder_form(gamma, phi).values
        nonzero += int(np.count_nonzero(regular)) + int(np.count_nonzero(holder))
    return CriterionResult(
        status=_verdict(nonzero == 0),
        measured=float(nonzero),
        bound=0.0,
        message=f"{nonzero} nonzero nodes over 20 random constants",
    )


def check_linear_closed_form() -> CriterionResult:
    """D^0.5 v = -v, v0 = 1 on [0, 1] against E_0.5(-t^0.5)."""
    h = 1.0 / 2048.0
    bound = 5e-3
    problem = FodeProblem.scalar(0.5, lambda t, v: -v, 1.0, name="relaxation")
    stepped = step_solve(problem, h, 1.0)
    picard = picard_solve(problem, h, 1.0, tol=1e-10)
    exact = mittag_leffler_values(0.5, 1.0, -np.sqrt(stepped.times))
    step_error = float(np.max(np.abs(stepped.values[:, 0] - exact)))
    picard_error = float(np.max(np.abs(picard.values[:, 0] - exact)))
    iterations = picard.picard_iters or 0
    measured = max(step_error, picard_error)
    ok = measured <= bound and picard.converged and iterations <= 60
    return CriterionResult(
        status=_verdict(ok),
        measured=measured,
        bound=bound,
        message=f"step {step_error:.3e}, Picard {picard_error:.3e} in {iterations} iterations",
        details={
            "step_error": step_error,
            "picard_error": picard_error,
            "picard_iters": iterations,
        },
    )


def check_existence_horizon() -> CriterionResult:
    """M = 1, L = 0, A = 1, T = 10, gamma = 0.5 gives Gamma(1.5)^2 = pi/4."""
    problem = FodeProblem.scalar(
        0.5, lambda t, v: 1.0, 0.0, box=BoxData(A=1.0, L=0.0, M=1.0, T=10.0), name="unit-rhs"
    )
    gap = abs(existence_horizon(problem) - math.pi / 4.0)
    return CriterionResult(
        status=_verdict(gap <= 1e-9),
        measured=gap,
        bound=1e-9,
        message=f"|T1 - pi/4| = {gap:.3e}",
    )


def check_blowup() -> CriterionResult:
    """v' = v^2, v0 = 1 blows up at 1; gamma = 0.5 brackets nest."""
    classical = FodeProblem.scalar(1.0, lambda t, v: v * v, 1.0, name="square")
    report = detect_blowup(classical, 1.0 / 1024.0, t_end=2.0, levels=1)
    fractional = FodeProblem.scalar(0.5, lambda t, v: v * v, 1.0, name="square")
    nested_report = detect_blowup(fractional, 1.0 / 128.0, t_end=4.0, levels=3)

    if report is None or nested_report is None:
        return CriterionResult(
            status="FAIL",
            measured=math.inf,
            bound=0.05,
            message="no blow-up detected",
        )
    levels = nested_report.levels
    nested = len(levels) == 3 and all(
        inner.low >= outer.low and inner.high <= outer.high
        for outer, inner in zip(levels, levels[1:])
    )
    contains = report.low <= 1.0 <= report.high
    ok = contains and report.width <= 0.05 and nested
    return CriterionResult(
        status=_verdict(ok),
        measured=report.width,
        bound=0.05,
        message=f"bracket [{report.low:.6f}, {report.high:.6f}], gamma=0.5 nested={nested}",
        details={"classical": report.model_dump(), "fractional": nested_report.model_dump()},
    )


def check_comparison_family() -> CriterionResult:
    """Ordered initial data under f = lam v + c stay ordered."""
    rng = np.random.default_rng(SUITE_SEED + 8)
    h, t_end = 1.0 / 256.0, 1.0
    violations = 0
    worst = 0.0
    cases = 24
    for _ in range(cases):
        lam = float(rng.uniform(0.0, 2.0))
        c = float(rng.uniform(-1.0, 1.0))
        gamma = float(rng.uniform(0.2, 0.9))
        v2_0 = float(rng.uniform(-1.0, 1.0))
        v1_0 = v2_0 - float(rng.uniform(0.0, 0.5))

        def rhs(t: float, v: float, lam: float = lam, c: float = c) -> float:
            return lam * v + c

        sub = step_solve(FodeProblem.scalar(gamma, rhs, v1_0), h, t_end).component(0)
        case = ComparisonCase(gamma, rhs, sub, FodeProblem.scalar(gamma, rhs, v2_0))
        result = check_comparison(case, t_end, h)
        violations += int(not result.holds)
        worst = max(worst, result.max_violation)
    return CriterionResult(
        status=_verdict(violations == 0),
        measured=float(violations),
        bound=0.0,
        message=f"{violations} violations in {cases} cases (max raw gap {worst:.3e})",
    )


def check_oscillator_decay() -> CriterionResult:
    """Fitted energy slope on [10, 200] and E(t) <= E(0)."""
    grid = GridFunction(np.zeros(401), 0.5)
    targets = {0.25: -0.5, 0.4: -0.8}
    details: dict[str, Any] = {}
    worst_slope_gap = 0.0
    for gamma, expected in targets.items():
        state = oscillator_closed_form(gamma, 0.0, 1.0, grid)
        slope = fit_decay_exponent(state.energy, 10.0, 200.0)
        details[f"slope@{gamma}"] = slope
        worst_slope_gap = max(worst_slope_gap, abs(slope - expected))

    bounded = True
    for gamma in (0.25, 0.4, 0.5):
        state = oscillator_closed_form(gamma, 0.0, 1.0, grid)
        e0 = float(state.energy.values[0])
        closed_ok = bool(np.all(state.energy.values <= e0 * (1.0 + 1e-9)))
        simulated = check_dissipation(
            gamma,
            lambda v: v,
            np.array([0.0, 1.0]),
            10.0,
            1.0 / 64.0,
            mode="hamiltonian",
            structure=ROTATION,
        )
        details[f"bounded@{gamma}"] = closed_ok and simulated.holds
        bounded = bounded and closed_ok and simulated.holds

    return CriterionResult(
        status=_verdict(worst_slope_gap <= 0.1 and bounded),
        measured=worst_slope_gap,
        bound=0.1,
        message=f"max |slope - (-2 gamma)| = {worst_slope_gap:.3f}, energy bounded={bounded}",
        details=details,
    )


def check_laplace_rule() -> CriterionResult:
    """L(D phi) = s^gamma L(phi) - phi(0+) s^(gamma-1) on a 2^16-step grid."""
    gamma = 0.5
    h = 1.0 / 65536.0
    times = np.arange(65537, dtype=float) * h
    functions = {
        "one": np.ones_like(times),
        "t": times.copy(),
        "relaxation": mittag_leffler_values(gamma, 1.0, -np.sqrt(times)),
    }
    worst = 0.0
    details = {}
    for name, values in functions.items():
        phi = GridFunction(values, h)
        for s in (25.0, 50.0):
            gap = laplace_check(gamma, phi, s).relative_gap
            details[f"{name}@{s:g}"] = gap
            worst = max(worst, gap)
    return CriterionResult(
        status=_verdict(worst <= 1e-3),
        measured=worst,
        bound=1e-3,
        message=f"max relative gap {worst:.3e}",
        details=details,
    )


def _duality_pair(h: float) -> tuple[GridFunction, GridFunction]:
    phi = _sample(lambda t: math.sin(math.pi * t) ** 2, h)
    psi = _sample(lambda t: math.sin(2.0 * math.pi * t) ** 2, h)
    return phi, psi


def check_right_duality() -> CriterionResult:
    """<D phi, psi> = <phi, right-RL psi> within 5 h ||phi|| ||psi||, bound halving with h."""
    gamma = 0.5
    gaps = []
    bounds = []
    for h in (1.0 / 512.0, 1.0 / 1024.0):
        phi, psi = _duality_pair(h)
        norms = float(np.max(np.abs(phi.values))) * float(np.max(np.abs(psi.values)))
        bounds.append(5.0 * h * norms)
        gaps.append(duality_gap(gamma, phi, psi))
    worst_ratio = max(gap / bound for gap, bound in zip(gaps, bounds))
    return CriterionResult(
        status=_verdict(worst_ratio <= 1.0),
        measured=worst_ratio,
        bound=1.0,
        message=f"gap / (5 h ||phi|| ||psi||) at most {worst_ratio:.3e}",
        details={
            "gaps": gaps,
            "bounds": bounds,
            "observed_ratio": gaps[0] / gaps[1] if gaps[1] > 0.0 else math.inf,
        },
    )


CRITERIA: dict[str, Callable[[], CriterionResult]] = {
    "01_ml_goldens": check_ml_goldens,
    "02_semigroup": check_semigroup,
    "03_fundamental_theorem": check_fundamental_theorem,
    "04_constant_annihilation": check_constant_annihilation,
    "05_linear_closed_form": check_linear_closed_form,
    "06_existence_horizon": check_existence_horizon,
    "07_blowup": check_blowup,
    "08_comparison": check_comparison_family,
    "09_oscillator_decay": check_oscillator_decay,
    "10_laplace_rule": check_laplace_rule,
    "11_right_duality": check_right_duality,
}


def run_criterion(name: str) -> CriterionResult:
    """Run one criterion; an exception counts as a failure."""
    try:
        result = CRITERIA[name]()
    except Exception as e:
        result = CriterionResult(
            status="FAIL",
            measured=math.nan,
            bound=math.nan,
            message=f"check raised {type(e).__name__}: {e}",
        )
    result.name = name
    logger.info(f"{name}: {result.status} ({result.message})")
    return result


def run_suite(workers: int = 4) -> list[CriterionResult]:
    """
    Run every criterion, fanning out over a thread pool.

    Returns:
        Results ordered by criterion name
    """
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run_criterion, CRITERIA))
    return sorted(results, key=lambda r: r.name)
