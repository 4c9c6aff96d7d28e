class TeleportError(Exception):
    """Base error; `exit_code` is what the command line returns for it."""

    exit_code: int = 2

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class UsageError(TeleportError):
    exit_code = 1


class NumericalError(TeleportError):
    exit_code = 2


class DimensionError(NumericalError, ValueError):
    pass


class NotHermitianError(NumericalError, ValueError):
    pass


class NotDensityMatrixError(NumericalError, ValueError):
    pass


class ConvergenceError(NumericalError):
    pass


class IntegratorError(NumericalError):
    pass


class DegenerateOutcomeError(NumericalError):
    pass


class NonMonotoneError(NumericalError):
    pass


class DegenerateDataError(NumericalError, ValueError):
    pass


class VerificationError(TeleportError):
    exit_code = 3
