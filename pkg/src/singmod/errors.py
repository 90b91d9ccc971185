"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class PrecisionError(ArithmeticError):
    """A numerical computation could not reach the accuracy it needs."""


class TruncationError(PrecisionError):
    """A series could not be summed to the requested accuracy."""


class PrecisionExhaustedError(PrecisionError):
    """Working precision ran out before an answer could be certified."""


class IndeterminateError(PrecisionError):
    """Neither a proof nor a refutation was reached within the budget."""


class BudgetExhaustedError(RuntimeError):
    """A search stopped early; ``completed`` describes the finished range."""

    def __init__(self, message, completed=None):
        super().__init__(message)
        self.completed = completed
