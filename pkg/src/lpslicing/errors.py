"""Exception hierarchy; the CLI maps each family onto an exit code."""


class SlicingError(Exception):
    exit_code = 2


class DomainError(SlicingError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateBodyError(DomainError):
    """Atoms or points do not span the ambient space."""


class DataError(SlicingError, ValueError):
    """A user-supplied evaluator returned a negative or non-finite value."""


class ConfigError(SlicingError, ValueError):
    """Malformed body, density or sweep config."""


class PositionError(SlicingError, ValueError):
    """The body is not in Lewis position."""


class ConvergenceError(SlicingError, RuntimeError):
    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvariantViolation(SlicingError, AssertionError):
    """A property guaranteed by theory failed numerically."""

    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InequalityViolation(InvariantViolation):
    """lhs exceeded rhs beyond Monte-Carlo tolerance."""
