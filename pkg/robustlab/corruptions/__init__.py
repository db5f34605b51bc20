"""The 19 common corruptions, their severity tables and the view augmentation family."""

from robustlab.corruptions.augment import augment_batch, augment_pair
from robustlab.corruptions.digital import adjust_contrast
from robustlab.corruptions.fractal import diamond_square
from robustlab.corruptions.severity import dump_severity_tables, severity_params
from robustlab.corruptions.suite import apply_corruption, corrupt_dataset, corruption_gallery

__all__ = [
    "adjust_contrast",
    "apply_corruption",
    "augment_batch",
    "augment_pair",
    "corrupt_dataset",
    "corruption_gallery",
    "diamond_square",
    "dump_severity_tables",
    "severity_params",
]
