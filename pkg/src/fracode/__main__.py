"""
frac-ode - Command-line entry point.

Usage:
    python -m fracode suite
    python -m fracode ml --alpha 2 --z -4
"""

from fracode import main

if __name__ == "__main__":
    raise SystemExit(main())
