"""Exception types shared across the package.

The CLI maps these onto exit codes: verification failures exit 1, usage
problems exit 2, capacity/budget problems exit 3.
"""


class CapacityError(Exception):
    """A requested table size exceeds the configured memory budget."""


class BudgetExceededError(Exception):
    """An enumeration hit its node budget before completing."""


class InsufficientTableError(Exception):
    """A computation needs more precomputed coefficients than are available."""


class FormatError(Exception):
    """A coefficient file is malformed (bad magic, version, or structure)."""


class ChecksumError(FormatError):
    """A coefficient file's checksum does not match its contents."""


class InconsistencyError(Exception):
    """Two quantities that must vanish together disagree beyond tolerance."""


class ConvergenceError(Exception):
    """A quadrature tail estimate exceeds the requested tolerance."""


class DegenerateIntervalError(ValueError):
    """Mollifier construction produced an empty leading prime interval."""
