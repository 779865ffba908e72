"""Exception types shared across the toolkit."""


class DepthcalError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensions(DepthcalError):
    """Model or camera parameters are non-positive or inconsistent."""


class EEOutsideFrustum(DepthcalError):
    """No end-effector point falls inside the camera frustum."""


class EmptyCloud(DepthcalError):
    """An operation received a point cloud with zero points."""


class EmptyInput(DepthcalError):
    """An operation received an empty sequence."""


class DegenerateGeometry(DepthcalError):
    """Point sets are collinear or otherwise underdetermine a rigid fit."""


class TooFewPoints(DepthcalError):
    """Fewer points than the operation's stated minimum."""


class TooFewKeypoints(DepthcalError):
    """Fewer matched keypoints than required for a pose fit."""


class NoValidCluster(DepthcalError):
    """Every cluster fell below the minimum size fraction."""


class NoCorrespondences(DepthcalError):
    """ICP found zero point pairs at the initial pose."""


class NoUsableFrames(DepthcalError):
    """No frame survived segmentation and sanity checking."""


class MissingGroundTruth(DepthcalError):
    """The dataset does not carry the ground truth the operation needs."""


class ConfigError(DepthcalError):
    """Configuration file is malformed, has unknown keys, or bad values."""


class DatasetError(DepthcalError):
    """Dataset directory is missing, unreadable, or malformed."""
