"""Exception hierarchy shared by all modules."""


class IetsError(Exception):
    """Base class; ``stage`` names the pipeline step that raised."""

    stage = "core"


class InputError(IetsError, ValueError):
    stage = "input"


class ModeError(InputError):
    """Operation needs exact coefficients but got floats (or vice versa)."""


class UnsupportedDivisorError(InputError):
    pass


class DegenerateTowerError(IetsError):
    stage = "degeneracy"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotApplicableError(IetsError):
    pass


class BranchUndefinedError(IetsError):
    stage = "branch"


class BranchAmbiguityWarning(UserWarning):
    pass


class InvalidSeedError(IetsError):
    stage = "seed"


class NoSeedError(IetsError):
    stage = "seed"


class CertificationFailed(IetsError):
    stage = "certify"


class SolverFailed(IetsError):
    stage = "newton"


class RegionUnsupported(IetsError):
    stage = "count"


class InconclusiveCount(IetsError):
    stage = "count"
