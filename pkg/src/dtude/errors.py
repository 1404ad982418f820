"""Exception hierarchy shared by all modules."""


class DtudeError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DtudeError, ValueError):
    pass


class SingularityError(DtudeError, ArithmeticError):
    pass


class NumericalError(DtudeError, ArithmeticError):
    pass


class StabilityError(DtudeError, ValueError):
    """A Schur / Hurwitz / filter-parameter precondition does not hold."""


class ControllabilityError(DtudeError, ValueError):
    pass


class ObservabilityError(DtudeError, ValueError):
    pass


class ProtocolError(DtudeError, RuntimeError):
    """A stepping function was called out of order."""


class IntegrationError(DtudeError, ArithmeticError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DivergenceError(DtudeError, RuntimeError):
    """A closed-loop run left the admissible state region.

    ``trace`` holds the samples recorded before the abort.
    """

    def __init__(self, message, t=None, trace=None):
        super().__init__(message)
        self.t = t
        self.trace = trace


class ConfigError(DtudeError, ValueError):
    def __init__(self, message, key=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line
