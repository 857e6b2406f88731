"""
frac-ode Command Runner

Executes one configured command, writes its table and manifest, and maps the
outcome to an exit status: 0 success, 1 bad input or failed precondition,
2 non-convergence or blow-up before t_end (partial output still written).
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from fracode.analysis import (
    ComparisonCase,
    check_comparison,
    fit_decay_exponent,
    laplace_check,
    oscillator_closed_form,
    oscillator_simulate,
)
from fracode.catalog import RhsCatalog
from fracode.config import RunConfig
from fracode.errors import ConfigError, FracError, PreconditionError
from fracode.fraccalc import GridFunction, frac_integral, uniform_times
from fracode.output import Table, persist_outputs
from fracode.solver import detect_blowup, picard_solve, solve_linear, step_solve
from fracode.special import MLParams, mittag_leffler, mittag_leffler_values
from fracode.suite import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_INCOMPLETE = 2

# closed-form and simulated oscillator grids are capped at these node counts
OSCILLATOR_CLOSED_NODES = 2000
OSCILLATOR_SIM_NODES = 4000
DECAY_WINDOW = (10.0, 200.0)


@dataclass
class CommandResult:
    """Table produced by a command plus its exit status."""
    table: Table
    exit_code: int = EXIT_OK


def _metadata(config: RunConfig, **extra: Any) -> dict[str, Any]:
    return {"command": config.command, **extra}


def _forcing(config: RunConfig) -> GridFunction:
    h, t_end = config.solver.h, config.solver.t_end
    times = uniform_times(h, t_end)
    if config.forcing == "zero":
        values = np.zeros_like(times)
    elif config.forcing == "one":
        values = np.ones_like(times)
    else:
        values = times.copy()
    return GridFunction(values, h)


def _scalar_rhs(config: RunConfig) -> Callable[[float, float], float]:
    entry = RhsCatalog.get(config.rhs)
    if entry.dim != 1:
        raise ConfigError("rhs", f"{config.rhs!r} is not scalar")
    rhs = entry.bind(config.lam)
    return lambda t, v: float(rhs(t, np.array([v]))[0])


# =============================================================================
# Commands
# =============================================================================

def run_ml(config: RunConfig) -> CommandResult:
    ml = config.ml
    value, regime = mittag_leffler(MLParams(ml.alpha, ml.beta, ml.z), tol=ml.tol)
    table = Table(
        columns=["alpha", "beta", "z", "value", "kind", "terms_used", "est_error", "flagged"],
        rows=[[
            ml.alpha, ml.beta, ml.z, value,
            regime.kind, regime.terms_used, regime.est_error, regime.flagged,
        ]],
        metadata=_metadata(config, regime=regime.model_dump()),
    )
    return CommandResult(table)


def run_solve(config: RunConfig) -> CommandResult:
    s = config.solver
    entry = RhsCatalog.get(config.rhs)
    problem = entry.problem(config.gamma, config.v0, config.lam, A=s.box_radius, T=s.t_end)
    if s.method == "picard":
        report = picard_solve(problem, s.h, s.t_end, tol=s.tol, max_iter=s.max_iter)
    else:
        report = step_solve(problem, s.h, s.t_end, endpoint=s.endpoint, growth_cap=s.growth_cap)

    extra: dict[str, Any] = {"rhs": entry.name, "report": report.model_dump()}
    exit_code = EXIT_OK
    if report.blowup is not None:
        bracket = detect_blowup(
            problem, s.h, growth_cap=s.growth_cap, t_end=s.t_end, levels=s.blowup_levels
        )
        extra["blowup_bracket"] = bracket.model_dump() if bracket else None
        exit_code = EXIT_INCOMPLETE
    elif not report.converged:
        exit_code = EXIT_INCOMPLETE

    if problem.dim == 1:
        value_columns = ["v"]
    else:
        value_columns = [f"v_{i}" for i in range(problem.dim)]
    rows = [
        [float(t), *map(float, v), float(r)]
        for t, v, r in zip(report.times, report.values, report.residual)
    ]
    table = Table(["t", *value_columns, "residual"], rows, _metadata(config, **extra))
    return CommandResult(table, exit_code)


def run_linear(config: RunConfig) -> CommandResult:
    b = _forcing(config)
    v0 = config.v0[0]
    gamma, lam = config.gamma, config.lam
    if lam == 0.0:
        solution = b.with_values(v0 + frac_integral(gamma, b).values)
    else:
        solution = solve_linear(gamma, lam, b, v0)
    relaxation = mittag_leffler_values(gamma, 1.0, lam * solution.times ** gamma)
    rows = [
        [float(t), float(v), float(e), float(f)]
        for t, v, e, f in zip(solution.times, solution.values, relaxation, b.values)
    ]
    table = Table(["t", "v", "e", "b"], rows, _metadata(config, forcing=config.forcing))
    return CommandResult(table)


def run_compare(config: RunConfig) -> CommandResult:
    s = config.solver
    f = _scalar_rhs(config)
    entry = RhsCatalog.get(config.rhs)
    lower = entry.problem(config.gamma, [config.sub_v0], config.lam, T=s.t_end)
    upper = entry.problem(config.gamma, config.v0, config.lam, T=s.t_end)
    sub_report = step_solve(lower, s.h, s.t_end, growth_cap=s.growth_cap)
    if sub_report.blowup is not None or len(sub_report.solution) == 0:
        raise PreconditionError(f"sub-solution blows up before t_end={s.t_end}")
    case = ComparisonCase(config.gamma, f, sub_report.component(0), upper)
    result = check_comparison(case, s.t_end, s.h)

    v2 = result.upper.values[:, 0]
    v1 = sub_report.values[: v2.size, 0]
    times = sub_report.times[: v2.size]
    rows = [
        [float(t), float(a), float(b), float(b - a)] for t, a, b in zip(times, v1, v2)
    ]
    metadata = _metadata(config, rhs=entry.name, **result.model_dump())
    exit_code = EXIT_INCOMPLETE if result.upper.blowup is not None else EXIT_OK
    return CommandResult(Table(["t", "v1", "v2", "gap"], rows, metadata), exit_code)


def run_oscillator(config: RunConfig) -> CommandResult:
    s = config.solver
    gamma, t_end = config.gamma, s.t_end
    if gamma <= 0.5:
        h = max(s.h, t_end / OSCILLATOR_CLOSED_NODES)
        grid = GridFunction(np.zeros(uniform_times(h, t_end).size), h)
        state = oscillator_closed_form(gamma, config.p0, config.q0, grid)
        mode = "closed_form"
    else:
        h = max(s.h, t_end / OSCILLATOR_SIM_NODES)
        state = oscillator_simulate(gamma, config.p0, config.q0, h, t_end)
        mode = "exploratory_simulation"

    t_lo, t_hi = DECAY_WINDOW[0], min(DECAY_WINDOW[1], state.energy.t_end)
    slope = fit_decay_exponent(state.energy, t_lo, t_hi) if t_hi > t_lo else None
    rows = [
        [float(t), float(p), float(q), float(e), slope]
        for t, p, q, e in zip(state.p.times, state.p.values, state.q.values, state.energy.values)
    ]
    metadata = _metadata(config, mode=mode, h=h, fitted_slope=slope, fit_window=[t_lo, t_hi])
    return CommandResult(Table(["t", "p", "q", "E", "slope"], rows, metadata))


def run_laplace(config: RunConfig) -> CommandResult:
    s = config.solver
    times = uniform_times(s.h, s.t_end)
    if config.phi == "one":
        values = np.ones_like(times)
    elif config.phi == "t":
        values = times.copy()
    else:
        values = mittag_leffler_values(config.gamma, 1.0, config.lam * times ** config.gamma)
    result = laplace_check(config.gamma, GridFunction(values, s.h), config.s)
    table = Table(
        ["s", "lhs", "rhs", "relative_gap"],
        [[config.s, result.lhs, result.rhs, result.relative_gap]],
        _metadata(config, phi=config.phi),
    )
    return CommandResult(table)


def run_suite_command(config: RunConfig) -> CommandResult:
    results = run_suite(config.workers)
    rows = [[r.name, r.status, r.measured, r.bound, r.message] for r in results]
    failed = [r.name for r in results if not r.passed]
    table = Table(
        ["criterion", "status", "measured", "bound", "message"],
        rows,
        _metadata(config, passed=len(results) - len(failed), failed=failed),
    )
    return CommandResult(table, EXIT_OK if not failed else EXIT_INCOMPLETE)


COMMANDS: dict[str, Callable[[RunConfig], CommandResult]] = {
    "ml": run_ml,
    "solve": run_solve,
    "linear": run_linear,
    "compare": run_compare,
    "oscillator": run_oscillator,
    "laplace": run_laplace,
    "suite": run_suite_command,
}


def run(config: RunConfig) -> int:
    """
    Execute config.command and persist its table.

    Returns:
        Exit status (0, 1 or 2)
    """
    try:
        result = COMMANDS[config.command](config)
    except FracError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION

    out = config.output
    parameters = config.model_dump(mode="json", by_alias=True, exclude={"output"})
    result.table.metadata.setdefault("parameters", parameters)
    paths = persist_outputs(
        result.table,
        out.path,
        fmt=out.format,
        reproducible=out.reproducible,
        exit_code=result.exit_code,
        parameters=parameters,
    )
    logger.info(f"{config.command}: exit {result.exit_code}, table {paths['table']}")
    return result.exit_code
