"""
Error types shared by the library and the command line
"""
from typing import Any, Optional, Sequence


class HeckePairError(Exception):
    """Base class for every error raised by this package"""


class FamilyMismatchError(HeckePairError, ValueError):
    """Two elements from different families (or parameters) were combined"""


class InvalidInputError(HeckePairError, ValueError):
    """Malformed configuration, word, matrix or file"""


class BudgetExceededError(HeckePairError, RuntimeError):
    """An enumeration ran out of budget.

    completed_radius is the largest radius that was fully enumerated and
    partial holds whatever was finished before the budget ran out.
    """

    def __init__(self, message: str, completed_radius: int = -1, partial: Any = None):
        super().__init__(message)
        self.completed_radius = completed_radius
        self.partial = partial


class CosetOutOfRangeError(HeckePairError, LookupError):
    """A coset needed by a computation lies outside the ball table"""

    def __init__(self, message: str, needed_radius: Optional[int] = None):
        super().__init__(message)
        self.needed_radius = needed_radius


class NotConditionallyNegativeError(HeckePairError, ValueError):
    """Schoenberg embedding requested for a kernel that is not CND"""

    def __init__(self, message: str, witness: Sequence[float]):
        super().__init__(message)
        self.witness = list(witness)


class ConsistencyError(HeckePairError, AssertionError):
    """An internal invariant was violated"""
