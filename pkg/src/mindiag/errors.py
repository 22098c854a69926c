class MindiagError(Exception):
    """Base class for all library errors."""


class ParameterError(MindiagError, ValueError):
    pass


class FormatError(MindiagError, ValueError):
    """Malformed or invalid matrix file."""


class NumericalError(MindiagError, ArithmeticError):
    """An iterative routine failed to converge."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DegenerateSpectrumError(MindiagError, ArithmeticError):
    """The extreme eigenvalue clusters cannot be separated."""


class ZeroPivotError(MindiagError, ZeroDivisionError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CertificateUnavailableError(MindiagError):
    pass


class SizeError(MindiagError, ValueError):
    pass
