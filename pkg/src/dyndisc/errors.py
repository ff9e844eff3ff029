"""Error types shared across the package.

Argument and state errors subclass the matching builtin so callers that
only know the stdlib hierarchy still catch them.
"""


class DimensionMismatch(ValueError):
    """Matrix / vector shapes are incompatible."""


class NumericalFailure(RuntimeError):
    """A numerical routine could not make progress (ill-conditioning)."""


class IndexOutOfPhase(IndexError):
    """Slot index outside the range of the current phase."""


class UnknownId(KeyError):
    """No live vector with this id."""


class UnknownEdge(KeyError):
    """No such edge in the graph."""


class TooLarge(ValueError):
    """Input exceeds the guard for exact enumeration."""


class ConvergenceFailure(RuntimeError):
    """Eigenvector computation failed to converge."""


class DecompositionOverflow(RuntimeError):
    """Decomposition recursion exceeded its depth budget."""


class BudgetExceeded(RuntimeError):
    """Deletion count exceeded the pruning budget of a piece."""


class InfeasibleDegree(ValueError):
    """No graph with the requested degree sequence exists."""


class BadParity(ValueError):
    """Parameter parity requirement violated."""


class NotMultipleOf8(ValueError):
    """Dimension must be a multiple of 8."""


class InvariantViolation(RuntimeError):
    """A structural invariant failed; this is a hard error, never a warning."""
