"""Exception types raised across the library."""


class CardioFatError(Exception):
    """Base class for all library errors."""


class MalformedHeader(CardioFatError, ValueError):
    """Raw HU container has a bad magic, version, geometry, or trailing bytes."""


class TruncatedPayload(CardioFatError, ValueError):
    """Raw HU container payload is shorter than width*height*2 bytes."""


class InvalidWindow(CardioFatError, ValueError):
    """Hounsfield window with lo >= hi."""


class InvalidSize(CardioFatError, ValueError):
    """Requested image size has a zero or negative dimension."""


class DimensionMismatch(CardioFatError, ValueError):
    """Two images that must share dimensions do not."""


class OddWidth(CardioFatError, ValueError):
    """Composite width is odd and cannot be split into halves."""


class OddDimensions(CardioFatError, ValueError):
    """Image dimensions are odd and cannot be split into quadrants."""


class PatchCountMismatch(CardioFatError, ValueError):
    """Patch grid does not hold exactly four patches."""


class BadRatios(CardioFatError, ValueError):
    """Split ratios do not sum to one."""


class CropLargerThanLoad(CardioFatError, ValueError):
    """Augmentation crop size exceeds load size."""


class ShapeError(CardioFatError, ValueError):
    """Tensor shape incompatible with the requested operation."""


class EmptyDataset(CardioFatError, ValueError):
    """Training requested on an empty dataset."""


class EmptyInput(CardioFatError, ValueError):
    """An aggregate operation received no inputs."""


class CorruptCheckpoint(CardioFatError, ValueError):
    """Checkpoint file has a bad magic, truncated payload, or tensor-table mismatch."""


class DatasetMissing(CardioFatError, FileNotFoundError):
    """Experiment pointed at a dataset directory that does not exist or is incomplete."""


class ConfigInvalid(CardioFatError, ValueError):
    """Experiment or training configuration violates an invariant."""
