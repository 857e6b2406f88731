"""
frac-ode command-line front end.

Usage:
    frac-ode suite
    frac-ode solve --rhs neg_identity --gamma 0.5 --h 1/1024 --t-end 1 --out v.csv
    frac-ode ml --alpha 2 --beta 1 --z -4
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from typing import Any

from fracode import __version__
from fracode.catalog import RhsCatalog
from fracode.errors import ConfigError

COMMANDS = ("ml", "solve", "linear", "compare", "oscillator", "laplace", "suite")

# flag destination -> dotted config key
FLAG_KEYS = {
    "gamma": "gamma",
    "lam": "lambda",
    "v0": "v0",
    "p0": "p0",
    "q0": "q0",
    "rhs": "rhs",
    "s": "s",
    "phi": "phi",
    "forcing": "forcing",
    "sub_v0": "sub_v0",
    "workers": "workers",
    "h": "solver.h",
    "t_end": "solver.t_end",
    "tol": "solver.tol",
    "max_iter": "solver.max_iter",
    "method": "solver.method",
    "endpoint": "solver.endpoint",
    "box_radius": "solver.box_radius",
    "alpha": "ml.alpha",
    "beta": "ml.beta",
    "z": "ml.z",
    "out": "output.path",
    "format": "output.format",
}


def number(text: str) -> float:
    """Float or exact fraction such as 1/1024."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frac-ode",
        description="Caputo fractional calculus and fractional ODE experiments",
        allow_abbrev=False,
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="Experiment (default: suite)")
    parser.add_argument("--version", action="version", version=f"frac-ode {__version__}")
    parser.add_argument("--config", help="JSON config file; flags override its values")

    problem = parser.add_argument_group("problem")
    problem.add_argument("--gamma", type=number, help="Fractional order in (0, 1)")
    problem.add_argument("--lambda", dest="lam", type=number, help="Linear coefficient")
    problem.add_argument("--v0", type=number, nargs="+", help="Initial value(s)")
    problem.add_argument("--p0", type=number, help="Oscillator initial p")
    problem.add_argument("--q0", type=number, help="Oscillator initial q")
    problem.add_argument("--rhs", choices=RhsCatalog.names(), help="Right-hand side")
    problem.add_argument("--s", type=number, help="Laplace variable")
    problem.add_argument("--phi", choices=["one", "t", "relaxation"], help="Laplace test function")
    problem.add_argument("--forcing", choices=["zero", "one", "t"], help="Forcing b(t) for linear")
    problem.add_argument("--sub-v0", type=number, help="Sub-solution initial value for compare")

    grid = parser.add_argument_group("grid and solver")
    grid.add_argument("--h", type=number, help="Grid step")
    grid.add_argument("--t-end", type=number, help="Final time")
    grid.add_argument("--tol", type=number, help="Picard tolerance")
    grid.add_argument("--max-iter", type=int, help="Picard iteration cap")
    grid.add_argument("--method", choices=["step", "picard"], help="Solver for solve")
    grid.add_argument("--endpoint", choices=["left", "right"], help="Marching rectangle endpoint")
    grid.add_argument(
        "--box-radius", type=number, help="Picard box radius A; --t-end must stay below the horizon"
    )

    ml = parser.add_argument_group("Mittag-Leffler")
    ml.add_argument("--alpha", type=number, help="First parameter in (0, 2]")
    ml.add_argument("--beta", type=number, help="Second parameter")
    ml.add_argument("--z", type=number, help="Real argument")

    out = parser.add_argument_group("output")
    out.add_argument("--out", help="Output table path")
    out.add_argument("--format", choices=["csv", "json"], help="Table format")
    out.add_argument("--reproducible", action="store_true", help="Omit timestamps")
    out.add_argument("--workers", type=int, help="Suite worker threads")
    out.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Dotted config keys for every flag that was given."""
    overrides = {key: getattr(args, dest) for dest, key in FLAG_KEYS.items()}
    overrides["command"] = args.command
    if args.reproducible:
        overrides["output.reproducible"] = True
    return overrides


def main(argv: list[str] | None = None) -> int:
    from fracode.config import load_config
    from fracode.runner import run

    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )

    try:
        config = load_config(args.config, overrides_from_args(args))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return run(config)
