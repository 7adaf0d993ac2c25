"""Exception types raised across the package."""


class HardyLabError(Exception):
    """Base class for all errors raised by hardylab."""


class ParameterOutOfRange(HardyLabError, ValueError):
    pass


class UnsupportedDimension(HardyLabError, ValueError):
    pass


class SingularPoint(HardyLabError, ValueError):
    pass


class EmptyGrid(HardyLabError, ValueError):
    pass


class NotDifferentiable(HardyLabError, ValueError):
    pass


class GraphsCross(HardyLabError, ValueError):
    pass


class BadParameters(HardyLabError, ValueError):
    pass


class NonIntegrableSingularity(HardyLabError, ArithmeticError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class TolNotReached(HardyLabError, ArithmeticError):
    """Cell budget exhausted before the requested tolerance was met.

    The best available value and error estimate travel with the exception.
    """

    def __init__(self, message, value=None, error=None, cells_used=0):
        super().__init__(message)
        self.value = value
        self.error = error
        self.cells_used = cells_used


class IncompatibleCase(HardyLabError, ValueError):
    pass


class IncompatibleMonotonicity(HardyLabError, ValueError):
    pass


class AllTrialsDegenerate(HardyLabError, RuntimeError):
    pass


class SolverFailure(HardyLabError, RuntimeError):
    pass


class EmptySuite(HardyLabError, ValueError):
    pass


class FitAmbiguous(HardyLabError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigInvalid(HardyLabError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
