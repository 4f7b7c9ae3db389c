"""Exception hierarchy.

Every error carries a CLI exit code so the command-line layer can map
failures without inspecting messages.
"""


class RemuxError(Exception):
    exit_code = 1


class ConfigError(RemuxError, ValueError):
    """Invalid device or netlist configuration.

    ``pointer`` is the JSON pointer of the offending field when the error
    comes from a file.
    """

    exit_code = 2

    def __init__(self, message, pointer=None):
        self.pointer = pointer
        if pointer is not None:
            message = f"{pointer}: {message}"
        super().__init__(message)


class NumericError(RemuxError, ArithmeticError):
    exit_code = 3


class InvalidFrequencyError(NumericError):
    pass


class SingularElementError(NumericError):
    def __init__(self, message, frequency=None):
        self.frequency = frequency
        super().__init__(message)


class IllConditionedNetworkError(NumericError):
    def __init__(self, message, frequency=None):
        self.frequency = frequency
        super().__init__(message)


class InsufficientDataError(NumericError):
    pass


class InvalidPeakError(NumericError):
    pass


class NonpassiveInputError(NumericError):
    pass


class NoResonanceError(NumericError):
    pass


class IntegratorFaultError(NumericError):
    pass


class FitError(RemuxError, RuntimeError):
    exit_code = 4


class DegenerateFitError(FitError):
    pass


class MaxIterationsError(FitError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class FitFailureError(FitError):
    def __init__(self, message, trace=None):
        self.trace = trace or []
        super().__init__(message)


class InfeasibleNotchError(FitError):
    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class IncompleteDesignError(FitError):
    pass


class PlotError(RemuxError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
