"""Exception and warning types raised across the package."""


class GeometryError(Exception):
    """Base class for failures that come from the shape itself."""


class InvalidRegion(GeometryError):
    pass


class RegionTooThin(GeometryError):
    pass


class DisconnectedAxis(GeometryError):
    pass


class SectionDegenerate(GeometryError):
    pass


class OutsideRegion(GeometryError):
    pass


class SelfIntersecting(GeometryError):
    pass


class IncompatibleJoint(GeometryError):
    pass


class EmptyTrajectory(ValueError):
    pass


class ZeroScoreWarning(RuntimeWarning):
    """All summed scores vanished; the optimal baseline fell back to the mean return."""


class ZeroGradientWarning(RuntimeWarning):
    """Gradient norm below threshold; the update was skipped."""
