"""Exception hierarchy shared by all modules."""


class MonotileError(Exception):
    """Base class for recoverable solver failures."""


class PreconditionError(MonotileError, ValueError):
    """A routine's stated hypothesis does not hold for the given input."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class InfeasibleAtScale(PreconditionError):
    """Faithful-mode gate that cannot be met at this instance size."""


class UnsatisfiableFamily(PreconditionError):
    """No member of the requested order exists within the degree bound."""


class BudgetExhausted(MonotileError):
    """A backtracking search ran out of nodes before deciding."""


class RetriesExhausted(MonotileError):
    """A Las Vegas routine failed to certify its output within the retry cap."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


class ChainExhausted(MonotileError):
    """No disjoint switching chain could be found for some pair."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class StageError(MonotileError):
    """Failure inside a multi-stage routine, tagged with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class CopyNotFound(MonotileError):
    """No copy located; ``proven_absent`` distinguishes exhaustive search from budget stop."""

    def __init__(self, message, proven_absent=False):
        super().__init__(message)
        self.proven_absent = proven_absent
