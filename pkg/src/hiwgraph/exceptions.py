"""Exception hierarchy.

Errors fall into three families that the command-line interface maps to
distinct exit codes: model/graph errors, data errors and budget errors.
"""


class HIWGraphError(Exception):
    """Base class for every error raised by this package."""


class ModelError(HIWGraphError, ValueError):
    """A graph or model object violates a structural requirement."""


class DataError(HIWGraphError, ValueError):
    """The data cannot support the requested computation."""


class BudgetError(HIWGraphError):
    """A brute-force routine would exceed its configured budget."""


class NotDecomposableError(ModelError):
    pass


class EdgeAbsentError(ModelError):
    pass


class EdgePresentError(ModelError):
    pass


class IllegalMoveError(ModelError):
    pass


class NotNestedError(ModelError):
    pass


class EmptyGraphError(ModelError):
    pass


class InvalidEpsilonError(ModelError):
    pass


class NotPositiveDefiniteError(DataError):
    pass


class SingularGramError(DataError):
    pass


class SingularConditioningSetError(DataError):
    pass


class DegenerateColumnError(DataError):
    pass


class CliqueTooLargeError(DataError):
    """Raised when a clique has at least as many vertices as there are samples."""


class TooLargeError(BudgetError):
    pass


class BudgetExceededError(BudgetError):
    pass
