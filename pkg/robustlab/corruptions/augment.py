"""
The stochastic view family: random crop (resized back), horizontal flip,
color jitter and grayscale.

Every view consumes the same number of random draws in the same order whatever
the probabilities are, so a given seed always yields the same pair.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import ndimage

from robustlab.corruptions.digital import adjust_contrast
from robustlab.models.corruption import AugmentationSpec
from robustlab.utils.helpers import make_rng

logger = logging.getLogger(__name__)

LUMA = np.array([0.299, 0.587, 0.114])


def luminance(x: np.ndarray) -> np.ndarray:
    return x @ LUMA


def resized_crop(x: np.ndarray, area: float, top_u: float, left_u: float) -> np.ndarray:
    """Square-aspect crop covering ``area`` of the image, resampled bilinearly to the input size."""
    height, width = x.shape[:2]
    side = math.sqrt(area)
    if side >= 1.0:
        return x.copy()
    crop_h, crop_w = side * height, side * width
    top = top_u * (height - crop_h)
    left = left_u * (width - crop_w)
    rows = top + (np.arange(height) + 0.5) * crop_h / height - 0.5
    cols = left + (np.arange(width) + 0.5) * crop_w / width - 0.5
    grid_r, grid_c = np.meshgrid(rows, cols, indexing="ij")
    return np.stack(
        [
            ndimage.map_coordinates(x[:, :, c], [grid_r, grid_c], order=1, mode="nearest")
            for c in range(x.shape[2])
        ],
        axis=2,
    )


def color_jitter(x: np.ndarray, strength: float, draws: np.ndarray) -> np.ndarray:
    """Brightness, then contrast, then saturation, each factor in [1 - strength, 1 + strength]."""
    brightness, contrast, saturation = 1.0 + strength * draws
    x = np.clip(x * brightness, 0.0, 1.0)
    x = np.clip(adjust_contrast(x, contrast), 0.0, 1.0)
    gray = luminance(x)[:, :, None]
    return np.clip(gray + (x - gray) * saturation, 0.0, 1.0)


def draw_view(x: np.ndarray, spec: AugmentationSpec, rng: np.random.Generator) -> np.ndarray:
    low, high = spec.crop_fraction
    area = low + rng.random() * (high - low)
    top_u, left_u = rng.random(2)
    flip_u = rng.random()
    jitter = rng.uniform(-1.0, 1.0, size=3)
    gray_u = rng.random()

    view = resized_crop(x, area, top_u, left_u)
    if flip_u < spec.flip_probability:
        view = view[:, ::-1, :]
    if spec.color_strength > 0:
        view = color_jitter(view, spec.color_strength, jitter)
    if gray_u < spec.grayscale_probability:
        view = np.repeat(luminance(view)[:, :, None], 3, axis=2)
    return np.ascontiguousarray(np.clip(view, 0.0, 1.0), dtype=np.float32)


def augment_pair(x: np.ndarray, spec: AugmentationSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two independent views of one image.

    Args:
        x: image (H, W, 3) in [0, 1]
        spec: augmentation family and seed; view a uses stream 0, view b stream 1

    Returns:
        (view_a, view_b), both float32 with the input's shape
    """
    x = np.asarray(x, dtype=np.float64)
    view_a = draw_view(x, spec, make_rng(spec.seed, 0))
    view_b = draw_view(x, spec, make_rng(spec.seed, 1))
    return view_a, view_b


def augment_batch(images: np.ndarray, spec: AugmentationSpec, seeds) -> Tuple[np.ndarray, np.ndarray]:
    """``augment_pair`` over a batch, image ``i`` drawn with ``seeds[i]``."""
    views_a, views_b = [], []
    for image, seed in zip(images, seeds):
        a, b = augment_pair(image, spec.model_copy(update={"seed": int(seed)}))
        views_a.append(a)
        views_b.append(b)
    return np.stack(views_a), np.stack(views_b)
