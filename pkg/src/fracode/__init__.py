"""
frac-ode - Caputo fractional calculus on uniform grids

Fractional integrals and derivatives, Mittag-Leffler evaluation, and solvers
for fractional ODEs with a batch front end and a self-check suite.
"""

__version__ = "0.1.0"
__author__ = "frac-ode Contributors"


def main() -> int:
    """Entry point for the frac-ode command."""
    from fracode.cli import main as cli_main
    return cli_main()
