"""Exception hierarchy shared by every module.

``app.py`` maps these onto process exit codes; library code only raises.
"""


class ApproximationError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class PreconditionError(ApproximationError):
    """Input violates a hypothesis of the requested operation."""

    exit_code = 2


class ConstraintError(PreconditionError):
    """A tuple (a, b, r, s) outside 0 <= r < a, 0 <= s < b."""


class RationalInputError(PreconditionError):
    """An irrational was required but the input is rational."""


class ParseError(PreconditionError):
    """Malformed textual input (real, constraint or psi spec)."""


class PrecisionCapError(ApproximationError):
    """Indeterminate sign: the enclosure did not separate before the precision cap."""

    exit_code = 3


class UnboundedMError(ApproximationError):
    """No finite M bounds a_k / psi_tilde(q_k) up to the index that was needed."""

    exit_code = 3


class HorizonError(ApproximationError):
    """A digit stream (or terminating expansion) was queried past its last valid index."""

    exit_code = 4
