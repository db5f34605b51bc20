"""
Procedural shape-classification datasets.

A desk-sized stand-in for real driving imagery: each class is one shape drawn
at a random position, scale and color over a noisy background. Generation is a
pure function of the seed, and the pixels are 8-bit quantized so the in-memory
dataset equals what is written to disk.
"""

import logging
import os
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from robustlab.core.config import settings
from robustlab.core.exceptions import ConfigurationError
from robustlab.models.dataset import Dataset
from robustlab.services.dataset_service import save_dataset, split_dataset
from robustlab.utils.helpers import derive_seed, make_rng, quantize_8bit, sha256_array

logger = logging.getLogger(__name__)

ShapeMask = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def _circle(dy, dx, r):
    return np.hypot(dy, dx) <= r


def _square(dy, dx, r):
    return np.maximum(np.abs(dy), np.abs(dx)) <= 0.8 * r


def _triangle(dy, dx, r):
    return (dy >= -r) & (dy <= 0.8 * r) & (np.abs(dx) <= 0.55 * (dy + r))


def _cross(dy, dx, r):
    return ((np.abs(dx) <= 0.3 * r) & (np.abs(dy) <= r)) | ((np.abs(dy) <= 0.3 * r) & (np.abs(dx) <= r))


def _diamond(dy, dx, r):
    return np.abs(dy) + np.abs(dx) <= r


def _ring(dy, dx, r):
    d = np.hypot(dy, dx)
    return (d <= r) & (d >= 0.55 * r)


def _hbar(dy, dx, r):
    return (np.abs(dy) <= 0.3 * r) & (np.abs(dx) <= r)


def _vbar(dy, dx, r):
    return (np.abs(dx) <= 0.3 * r) & (np.abs(dy) <= r)


SHAPES: Dict[str, ShapeMask] = {
    "circle": _circle,
    "square": _square,
    "triangle": _triangle,
    "cross": _cross,
    "diamond": _diamond,
    "ring": _ring,
    "hbar": _hbar,
    "vbar": _vbar,
}
SHAPE_NAMES = list(SHAPES)

BACKGROUND_NOISE = 0.03


def render_shape(shape: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw one image of ``shape``.

    Draw order is fixed: center (2), radius, colors (6), light-on-dark flip,
    background noise.
    """
    cy, cx = rng.uniform(0.35, 0.65, size=2) * size
    radius = rng.uniform(0.2, 0.3) * size
    dark = rng.uniform(0.0, 0.4, size=3)
    light = rng.uniform(0.6, 1.0, size=3)
    if rng.random() < 0.5:
        background, foreground = dark, light
    else:
        background, foreground = light, dark
    noise = rng.normal(0.0, BACKGROUND_NOISE, size=(size, size, 3))

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    mask = SHAPES[shape](yy + 0.5 - cy, xx + 0.5 - cx, radius)
    image = np.where(mask[..., None], foreground, background) + noise
    return np.clip(image, 0.0, 1.0)


def gen_synthetic(classes: int, per_class: int, size: int = 32, seed: int = 0) -> Dataset:
    """
    Balanced synthetic dataset of ``classes * per_class`` images.

    Image i has label ``i % classes`` and is drawn from its own seed
    ``derive_seed(seed, i)``.

    Args:
        classes: number of shape classes, 2..8
        per_class: images per class
        size: image height and width, at least 16
        seed: generator seed

    Returns:
        Dataset with 8-bit quantized float32 pixels

    Raises:
        ConfigurationError: unsupported class count, size or per_class
    """
    if not settings.SYNTHETIC_MIN_CLASSES <= classes <= settings.SYNTHETIC_MAX_CLASSES:
        raise ConfigurationError(
            f"classes must be in [{settings.SYNTHETIC_MIN_CLASSES}, {settings.SYNTHETIC_MAX_CLASSES}], got {classes}"
        )
    if size < settings.SYNTHETIC_MIN_SIZE:
        raise ConfigurationError(f"size must be at least {settings.SYNTHETIC_MIN_SIZE}, got {size}")
    if per_class < 1:
        raise ConfigurationError(f"per_class must be positive, got {per_class}")

    count = classes * per_class
    labels = np.arange(count, dtype=np.int64) % classes
    images = np.empty((count, size, size, 3), dtype=np.float32)
    for i in range(count):
        images[i] = render_shape(SHAPE_NAMES[labels[i]], size, make_rng(derive_seed(seed, i), 0))
    images = quantize_8bit(images)

    dataset = Dataset(
        images=images,
        labels=labels,
        class_names=SHAPE_NAMES[:classes],
        dataset_id=f"synthetic-{sha256_array(images)[:12]}",
        paths=[os.path.join("images", f"{i:06d}.png") for i in range(count)],
    )
    logger.info(f"Generated {count} synthetic images ({classes} classes, {size}x{size}, seed {seed})")
    return dataset


def write_synthetic(
    out_dir: str,
    classes: int,
    per_class: int,
    size: int = 32,
    seed: int = 0,
    test_per_class: Optional[int] = None,
) -> Tuple[Dataset, Optional[Dataset]]:
    """
    Generate and write a synthetic dataset (and optionally a held-out split).

    Without ``test_per_class`` the dataset is written to ``out_dir``; with it,
    ``out_dir/train`` and ``out_dir/test`` receive ``per_class`` and
    ``test_per_class`` images per class.
    """
    if test_per_class is None:
        dataset = gen_synthetic(classes, per_class, size, seed)
        save_dataset(dataset, out_dir)
        return dataset, None

    full = gen_synthetic(classes, per_class + test_per_class, size, seed)
    train, test = split_dataset(full, test_per_class)
    save_dataset(train, os.path.join(out_dir, "train"))
    save_dataset(test, os.path.join(out_dir, "test"))
    return train, test
