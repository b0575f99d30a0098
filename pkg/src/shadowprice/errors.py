"""Exception hierarchy shared by every module."""


class ShadowPriceError(Exception):
    """Base class for all package errors."""


class DomainError(ShadowPriceError, ValueError):
    """A function was evaluated outside its domain."""


class DimensionMismatch(ShadowPriceError, ValueError):
    pass


class GeneratorBlowup(ShadowPriceError):
    """Cross product of generator sets exceeded ``max_generators``."""


class NotPiecewiseLinear(ShadowPriceError, ValueError):
    pass


class NonConvexObjective(ShadowPriceError, ValueError):
    pass


class NoKktPoint(ShadowPriceError):
    pass


class UnboundedMultipliers(ShadowPriceError):
    """Active constraint normals are linearly dependent."""


class ProjectionFailure(ShadowPriceError):
    pass


class DimensionTooLarge(ShadowPriceError, ValueError):
    pass


class BaseUnsolved(ShadowPriceError):
    pass


class InsufficientRows(ShadowPriceError, ValueError):
    pass


class UnsupportedScenario(ShadowPriceError, ValueError):
    pass


class UnsupportedCost(UnsupportedScenario):
    """Provider cost of a kind the problem builder cannot express."""
