"""Exception hierarchy shared across the package.

Everything derives from ValueError or RuntimeError so callers that do not
care about the fine-grained category can catch the builtin type.
"""


class DegenerateInputError(ValueError):
    """Input has no usable variation (constant signal, zero variance)."""


class DegenerateFitError(ValueError):
    """A fitted quantity collapsed to zero and cannot be normalized."""


class InsufficientDataError(ValueError):
    """Not enough observations to run the requested procedure."""


class RankDeficiencyError(ValueError):
    """Design matrix is rank deficient; a unique solution does not exist."""

    def __init__(self, message, columns=None):
        super().__init__(message)
        self.columns = list(columns) if columns is not None else []


class NumericalFailureError(RuntimeError):
    """The solver produced non-finite values; diagnostics in the message."""


class FormatError(ValueError):
    """A file does not conform to the documented on-disk format."""


class SpecInfeasibleError(ValueError):
    """A simulation spec cannot be realized (e.g. events overflow the run)."""

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible
