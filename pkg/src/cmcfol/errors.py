"""Exception hierarchy shared by every module."""


class CmcError(Exception):
    """Base class for all library errors."""


# mesh / geometry
class DegenerateLattice(CmcError):
    pass


class AngleOutOfRange(CmcError):
    pass


class MarkedPointsCollide(CmcError):
    pass


class TruncationTooLow(CmcError):
    pass


class NonPositiveFaceArea(CmcError):
    pass


class QuadratureFailure(CmcError):
    pass


class ChartDomainError(CmcError):
    pass


# solver
class PositiveChi(CmcError):
    pass


class InadmissibleH(CmcError):
    pass


class NonConvergence(CmcError):
    pass


class LinearSolveFailure(CmcError):
    pass


class ExponentOverflow(CmcError):
    pass


class BoundsViolated(CmcError):
    pass


# flow / duality
class FlowSingular(CmcError):
    pass


class DomainError(CmcError):
    pass


class CurvatureNotConstant(CmcError):
    pass


class BoundViolation(CmcError):
    pass


# foliation
class EmptyInterval(CmcError):
    pass


class NotConstantCurvature(CmcError):
    pass


class OrderingViolated(CmcError):
    pass


# landslide
class DegenerateComposite(CmcError):
    pass


class ZeroHopf(CmcError):
    pass


class SingularB(CmcError):
    pass


# io
class ConfigError(CmcError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
