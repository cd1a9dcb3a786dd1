"""Exception types raised across the package."""


class BergkernError(Exception):
    """Base class for every error raised by bergkern."""


class InvalidMonomialSet(BergkernError, ValueError):
    pass


class NotHomogeneous(BergkernError, ValueError):
    pass


class MissingCorner(BergkernError, ValueError):
    pass


class DecoupledProfile(BergkernError, ValueError):
    pass


class RatioOutOfRange(BergkernError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ZeroPotential(BergkernError, ValueError):
    pass


class GridMismatch(BergkernError, ValueError):
    pass


class UnreachableTarget(BergkernError):
    pass


class CoveringFailure(BergkernError):
    pass


class QuadratureNonConvergent(BergkernError):
    pass


class TailNotCertified(BergkernError):
    pass


class InsufficientDecay(BergkernError):
    pass


class BudgetExceeded(BergkernError):
    pass


class NoConvergence(BergkernError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class SupportEscapesBox(BergkernError, ValueError):
    pass


class NonPositiveRatio(BergkernError):
    pass


class DimensionTooLarge(BergkernError, ValueError):
    pass


class SingularInverse(BergkernError):
    pass


class NoCleanSubcube(BergkernError):
    pass


class ConfigInvalid(BergkernError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class IoFailure(BergkernError):
    pass
