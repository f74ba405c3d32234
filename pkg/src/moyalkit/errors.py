"""Exception hierarchy.

Errors fall into two groups that the command line maps to distinct exit
codes: validation errors (bad inputs, violated preconditions) and numerical
guards (a computation would silently lose accuracy). Guard errors carry the
offending quantity and the threshold it was compared against.
"""


class MoyalkitError(Exception):
    """Base class for all package errors."""


class ValidationError(MoyalkitError):
    """Inputs violate a documented precondition."""


class NumericalGuardError(MoyalkitError):
    """A numerical accuracy guard tripped.

    Parameters
    ----------
    message : str
        Human readable description.
    quantity : float, optional
        The measured value that violated the guard.
    threshold : float, optional
        The threshold the quantity was compared against.
    """

    def __init__(self, message, quantity=None, threshold=None):
        super().__init__(message)
        self.quantity = quantity
        self.threshold = threshold

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "quantity": self.quantity,
            "threshold": self.threshold,
        }


class ConditionViolation(ValidationError):
    """A defining sequence fails one of the structural conditions."""

    def __init__(self, condition, index, message=None):
        self.condition = condition
        self.index = index
        super().__init__(message or f"condition {condition} fails at index {index}")


class NoFeasibleConstant(ValidationError):
    """No point of the search grid satisfies the growth inequality."""


class UnsupportedFamily(ValidationError):
    pass


class SpecMismatch(ValidationError):
    pass


class OrderTooHigh(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class NegativeValues(ValidationError):
    pass


class OffLattice(ValidationError):
    pass


class TruncationError(NumericalGuardError):
    """The weight-function supremum was attained at the last stored index."""


class BoundaryLeak(NumericalGuardError):
    """Samples do not decay at the edge of the box; a transform would alias."""


class OuterBoundaryLeak(NumericalGuardError):
    """The outer integrand of the extension functional has not decayed."""


class IntegrandGrowth(NumericalGuardError):
    """The growth of a dual element is not dominated by the test function decay."""
