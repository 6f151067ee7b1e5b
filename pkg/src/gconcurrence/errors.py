"""Exception hierarchy shared by all modules.

Each class carries the process exit code the CLI maps it to.
"""


class GConcurrenceError(Exception):
    exit_code = 1


class DomainError(GConcurrenceError, ValueError):
    """An argument lies outside the domain of the requested operation."""

    exit_code = 3


class PoleError(DomainError):
    """A moment order sits at (or left of) a pole of the Gamma product."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class DegenerateInputError(DomainError):
    pass


class ContractError(DomainError):
    """Mismatched inputs, e.g. a histogram and a curve over different variables."""


class CapabilityError(DomainError):
    """The request is valid but beyond what the chosen method supports."""


class AccuracyError(GConcurrenceError, ArithmeticError):
    """A numerical routine could not reach its declared accuracy."""

    exit_code = 4

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class PartialResultError(GConcurrenceError, RuntimeError):
    """Sampling stopped early; ``delivered`` samples were produced."""

    exit_code = 5

    def __init__(self, message, delivered=0, partial=None):
        super().__init__(message)
        self.delivered = delivered
        self.partial = partial
