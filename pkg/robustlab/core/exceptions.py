"""Error hierarchy shared by every robustlab module.

The CLI catches ``RobustLabError`` and turns it into a one-line diagnostic.
"""

from typing import Optional, Sequence


class RobustLabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(RobustLabError, ValueError):
    """Invalid hyperparameter, stride, size or other configuration value."""


class DimensionError(RobustLabError, ValueError):
    """Two shapes that must agree do not."""

    def __init__(self, message: str, expected: Optional[Sequence[int]] = None, actual: Optional[Sequence[int]] = None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {tuple(expected) if expected is not None else '?'}, got {tuple(actual) if actual is not None else '?'})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class LabelIndexError(RobustLabError, IndexError):
    """Class index outside ``[0, num_classes)``."""


class DegenerateInputError(RobustLabError, ValueError):
    """Zero vector passed where a direction is needed (cosine similarity, normalization)."""


class ContractError(RobustLabError):
    """Caller violated an API contract (non-scalar backward, wrong arity, reused tape)."""


class NoNegativesError(RobustLabError, ValueError):
    """Contrastive loss requested on a batch with fewer than two instances."""


class InputTooSmallError(RobustLabError, ValueError):
    """Image too small for a spatial corruption."""


class NotImplementedNormError(RobustLabError, NotImplementedError):
    """Attack norm other than L-infinity."""


class CheckpointError(RobustLabError):
    """Base class for checkpoint load failures."""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class CheckpointFormatError(CheckpointError):
    pass


class DatasetError(RobustLabError):
    """Base class for dataset ingestion failures."""


class MissingImageError(DatasetError, FileNotFoundError):
    def __init__(self, path: str):
        super().__init__(f"Image file not found: {path}")
        self.path = path


class ImageShapeError(DatasetError, ValueError):
    def __init__(self, path: str, expected: Sequence[int], actual: Sequence[int]):
        super().__init__(f"Image {path} has shape {tuple(actual)}, expected {tuple(expected)}")
        self.path = path
        self.expected = tuple(expected)
        self.actual = tuple(actual)


class ManifestLabelError(DatasetError, ValueError):
    def __init__(self, line_number: int, label: int, num_classes: int):
        super().__init__(f"Manifest line {line_number}: label {label} out of range for {num_classes} classes")
        self.line_number = line_number
        self.label = label


class CorruptionBatchError(RobustLabError):
    """A single image of a batch failed to corrupt; ``index`` names it."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"Corruption failed for image {index}: {cause}")
        self.index = index
        self.cause = cause


class ReportMismatchError(RobustLabError, ValueError):
    """Records passed to the report renderer do not share a dataset."""
