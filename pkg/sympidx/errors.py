"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SympIndexError(Exception):
    exit_code = 1


class InputError(SympIndexError):
    """Bad input: malformed documents, failed validation, violated preconditions."""
    exit_code = 2


class ConfigError(InputError):
    pass


class NotSymplecticError(InputError):

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NotCoisotropicError(InputError):
    pass


class DocumentError(InputError):
    pass


class DegenerateEndpointError(InputError):
    pass


class NonClosingOrbitError(InputError):
    pass


class NumericalError(SympIndexError):
    """The numbers could not be trusted: refinement exhausted, ill-conditioning."""
    exit_code = 3


class RefinementRequired(NumericalError):
    pass


class PhaseStepTooLarge(NumericalError):

    def __init__(self, message: str, max_step: float, depth: int = 0):
        super().__init__(message)
        self.max_step = max_step
        self.depth = depth


class IllConditionedSpectrum(NumericalError):
    pass


class PropertyViolation(SympIndexError):
    exit_code = 4

    def __init__(self, message: str, case: dict = None):
        super().__init__(message)
        self.case = case or {}
