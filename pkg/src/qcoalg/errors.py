"""Exception hierarchy shared by all modules."""


class CoalgError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CoalgError, ValueError):
    """An input violates a documented invariant."""


class ShapeError(ValidationError):
    """Operands have incompatible dimensions."""


class TruncationError(ValidationError):
    """A truncated walk was asked for more steps than its window can hold."""


class NumericalError(CoalgError, ArithmeticError):
    """A numerical procedure failed to converge or lost rank stability."""


class CycleNotFoundError(NumericalError):
    """No recurrence was found within the step budget.

    ``closest`` is the smallest max-norm distance seen between any two
    states of the orbit.
    """

    def __init__(self, message: str, closest: float):
        super().__init__(message)
        self.closest = closest
