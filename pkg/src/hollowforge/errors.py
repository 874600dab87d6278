"""Exception types raised across the package."""


class HollowForgeError(Exception):
    """Base class for all package errors."""


class CollinearInput(HollowForgeError):
    pass


class ContainedDisk(HollowForgeError):
    pass


class DegeneratePolygon(HollowForgeError):
    pass


class InvalidPolygon(HollowForgeError):
    pass


class InvalidErrorBound(HollowForgeError):
    pass


class OverlapViolation(HollowForgeError):
    pass


class NoConvergence(HollowForgeError):
    def __init__(self, message, point=None, residual=None):
        super().__init__(message)
        self.point = point
        self.residual = residual


class TraceStall(HollowForgeError):
    pass


class ProbeTooSmall(HollowForgeError):
    pass


class BelowMinimum(HollowForgeError):
    pass


class NoInteriorVertex(HollowForgeError):
    pass


class OpenMesh(HollowForgeError):
    pass


class NonManifold(HollowForgeError):
    pass


class SelfIntersectingVoid(HollowForgeError):
    pass


class ConfigError(HollowForgeError, ValueError):
    pass
