"""Exception hierarchy. The CLI maps each family onto an exit code."""


class RdclassError(Exception):
    exit_code = 1


class ConfigError(RdclassError, ValueError):
    exit_code = 2


class DataError(RdclassError, ValueError):
    exit_code = 3


class DegenerateInputError(DataError):
    """Input has too little variety for the requested operation."""


class EmptyTargetError(DataError):
    """No target energy left to describe (empty mask or all-zero profile)."""


class TrainingError(RdclassError, RuntimeError):
    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
