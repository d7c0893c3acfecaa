"""Exception types shared across the pipeline."""


class GarmentGanError(Exception):
    """Base class for all library errors."""


class InvalidLabel(GarmentGanError):
    """A parse map contains a label outside the 10-class vocabulary."""


class DegeneratePixel(GarmentGanError):
    """A soft segmentation map has an all-zero pixel and cannot be decoded."""


class ShapeMismatch(GarmentGanError):
    """Two inputs that must share a geometry do not."""


class InvalidGeometry(GarmentGanError):
    """Image geometry violates a network's divisibility requirement."""


class EmptyTargetRegion(GarmentGanError):
    """No torso/arm/top-clothes pixel exists, so no mask rectangle can be built."""


class SingularTps(GarmentGanError):
    """The thin-plate-spline linear system is singular."""


class InsufficientData(GarmentGanError):
    """Too few samples for the requested statistic."""


class MissingAsset(GarmentGanError):
    """A dataset file expected on disk is absent."""


class InvalidPose(GarmentGanError):
    """A keypoint JSON file is malformed."""


class TrainingDiverged(GarmentGanError):
    """A loss became non-finite during training."""


class ConfigError(GarmentGanError):
    """Configuration file or override is invalid."""
