class RMFLabError(Exception):
    """Base class for validation errors raised by rmflab."""


class BudgetExceededError(RMFLabError, ValueError):
    pass


class TableTooSmallError(RMFLabError, ValueError):
    pass


class DomainError(RMFLabError, ValueError):
    pass


class HypothesisError(RMFLabError, ValueError):
    """A parameter violates the range on which an identity is claimed."""


class PoleError(RMFLabError, ArithmeticError):
    pass


class ConsistencyError(RMFLabError, ArithmeticError):
    """Two independent computations of the same exact quantity disagree."""


class DeligneViolationError(RMFLabError, ArithmeticError):
    pass


class ResolutionError(RMFLabError, ArithmeticError):
    pass


class CacheMissingError(RMFLabError, FileNotFoundError):
    pass
