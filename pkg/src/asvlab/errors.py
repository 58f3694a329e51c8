"""Exception hierarchy shared by all asvlab modules."""


class AsvError(Exception):
    """Base class for every error raised by asvlab."""


class DomainError(AsvError, ValueError):
    """Argument outside the domain of the function."""


class DegreeOutOfRange(DomainError):
    pass


class PoleError(AsvError, ZeroDivisionError):
    """Evaluation lands on a pole of the Gamma function (or a vanishing denominator)."""


class NumericalFailure(AsvError, ArithmeticError):
    """A numerical kernel failed (non-convergence, invalid weights, non-finite values)."""


class CrossCheckError(AsvError):
    """Two independent evaluation routes disagree beyond tolerance."""


class BoundViolation(AsvError):
    """A bound that should hold was numerically violated."""

    def __init__(self, message, d=None):
        super().__init__(message)
        self.d = d


class InvariantFailure(AsvError):
    pass


class GuaranteeViolation(AsvError):
    """Empirical approximation ratio fell below the theoretical guarantee."""
