"""Exception hierarchy shared by all modules."""


class ParameterError(ValueError):
    """Invalid user-supplied parameters (CLI exit status 1)."""


class OutsideBulkError(ParameterError):
    """Scaling center or step index lies outside the bulk region."""


class NumericalGuardError(ArithmeticError):
    """A numerical safety check failed (CLI exit status 2)."""


class StepTooLargeError(NumericalGuardError):
    """A single lifted step moved an angle by at least the allowed amount."""
