class NLCSError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class InvalidDimensionError(NLCSError, ValueError):
    pass


class DimensionMismatchError(NLCSError, ValueError):
    pass


class EvaluationError(NLCSError, ValueError):
    """A diagonal generator was undefined or non-finite at some level."""

    def __init__(self, message: str, level: int = None):
        super().__init__(message)
        self.level = level


class ExponentialOverflowError(NLCSError, ArithmeticError):
    def __init__(self, message: str, norm: float = None):
        super().__init__(message)
        self.norm = norm


class ParameterError(NLCSError, ValueError):
    pass


class DomainError(NLCSError, ValueError):
    pass


class ConstructionError(NLCSError, ValueError):
    def __init__(self, message: str, level: int = None):
        super().__init__(message)
        self.level = level


class TruncationError(NLCSError, ValueError):
    def __init__(self, message: str, tail_mass: float = None, dim: int = None):
        super().__init__(message)
        self.tail_mass = tail_mass
        self.dim = dim


class NonInvertibleError(NLCSError, ValueError):
    pass


class UnsupportedLabelError(NLCSError, ValueError):
    pass


class DegenerateStatisticsError(NLCSError, ArithmeticError):
    pass


class UsageError(NLCSError, ValueError):
    exit_code = 2


def error_payload(exc: Exception) -> dict:
    """JSON-ready description of an error, as written to stderr by the CLI."""
    code = getattr(exc, "exit_code", 1)
    return {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
