"""Exception hierarchy shared by every module of the package."""


class QnmError(ValueError):
    """Base class for all errors raised by :mod:`qnmqubit`."""


class InvalidConfigError(QnmError):
    pass


class InvalidBathError(QnmError):
    pass


class DenseBathError(InvalidBathError):
    """Frequency grid too coarse to emulate a continuum."""


class ScreeningValidityError(QnmError):
    """Screening parameter outside the single-valued domain."""


class DegenerateForcingError(QnmError):
    pass


class InstanceTooLargeError(QnmError):
    pass


class TruncationError(QnmError):
    """Fock cutoff too small for the requested coherent amplitudes."""


class InsufficientSamplesError(QnmError):
    pass


class HorizonError(QnmError):
    """Requested time exceeds half the bath revival time."""


class ShapeError(QnmError):
    pass


class ConfigParseError(QnmError):
    pass
