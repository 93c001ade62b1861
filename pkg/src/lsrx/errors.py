"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input is outside the mathematical domain of the operation."""


class SingularityError(DomainError):
    """A ratio moment has a pole on the support of the distribution."""


class IllPosedError(DomainError):
    """The limiting problem is singular (e.g. rank-deficient sample covariance)."""


class DegenerateParameterError(DomainError):
    """A denominator that should be positive vanished for these parameters."""


class ConfigError(ValueError):
    """A run configuration failed validation."""


class NonConvergenceError(RuntimeError):
    """A zero-finding or fixed-point routine failed to reach tolerance.

    Carries the best iterate seen so that callers can inspect or reseed.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
