"""Exception hierarchy shared by all looptrack modules."""


class LoopTrackError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(LoopTrackError):
    """Arguments violate a precondition (wrong shape, non-finite, too few points)."""


class ConfigurationError(InvalidInputError):
    """A configuration object is inconsistent with the data or model it is used with."""


class DegenerateGeometryError(LoopTrackError):
    """Point set carries too little geometric information (coincident, collinear)."""


class DegenerateMotionError(LoopTrackError):
    """Observation window shows no usable motion (stationary target)."""


class StraightLineError(DegenerateMotionError):
    """Motion has no measurable curvature; circular-arc quantities are undefined."""


class SingularityError(LoopTrackError):
    """State coincides with the centre of curvature; the process model is singular."""


class AlignmentError(LoopTrackError):
    """3D points are inconsistent with the plane frame they are aligned against."""


class IncompleteLoopError(LoopTrackError):
    """Trajectory never returns near its start; no closed loop to fit."""


class NumericalError(LoopTrackError):
    """A linear solve or update failed numerically (singular matrix, non-finite values)."""
