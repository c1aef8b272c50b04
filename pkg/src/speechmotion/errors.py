"""Exception types shared across the package.

ValueError stays the type for caller mistakes (bad shapes, bad arguments).
The two classes here mark conditions the command-line layer maps to its own
exit codes: malformed or inconsistent data files, and numeric blow-ups.
"""

from __future__ import annotations


class DataError(ValueError):
    """Input data is malformed, inconsistent, or insufficient."""


class NumericError(ArithmeticError):
    """A numeric procedure produced non-finite values or failed to converge."""
