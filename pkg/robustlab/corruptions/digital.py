"""Digital corruptions: contrast, elastic transform, pixelate and saturate."""

from typing import Dict

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage import color


def adjust_contrast(x: np.ndarray, factor: float) -> np.ndarray:
    """Scale every channel about its mean; factor 1 is the identity and a constant image is a fixed point."""
    means = x.mean(axis=(0, 1), keepdims=True)
    return (x - means) * factor + means


def contrast(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    return adjust_contrast(x, params["factor"])


def elastic_transform(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """
    Resample along a smooth random displacement field.

    Two uniform noise planes are Gaussian-smoothed with ``sigma``, scaled so the
    largest displacement is ``alpha`` pixels, and used as row/column offsets with
    bilinear sampling and edge clamping.
    """
    height, width = x.shape[:2]
    sigma = params["sigma"]
    dy = ndimage.gaussian_filter(rng.uniform(-1.0, 1.0, size=(height, width)), sigma=sigma, mode="reflect")
    dx = ndimage.gaussian_filter(rng.uniform(-1.0, 1.0, size=(height, width)), sigma=sigma, mode="reflect")
    peak = max(np.abs(dy).max(), np.abs(dx).max(), 1e-12)
    dy *= params["alpha"] / peak
    dx *= params["alpha"] / peak

    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    coords = [rows + dy, cols + dx]
    return np.stack(
        [ndimage.map_coordinates(x[:, :, c], coords, order=1, mode="nearest") for c in range(x.shape[2])],
        axis=2,
    )


def pixelate(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Box-downsample by ``factor`` and blow back up with nearest neighbour."""
    height, width = x.shape[:2]
    small = (max(1, int(width * params["factor"])), max(1, int(height * params["factor"])))
    channels = []
    for c in range(x.shape[2]):
        plane = Image.fromarray(x[:, :, c].astype(np.float32))
        plane = plane.resize(small, Image.Resampling.BOX).resize((width, height), Image.Resampling.NEAREST)
        channels.append(np.asarray(plane, dtype=np.float64))
    return np.stack(channels, axis=2)


def saturate(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    hsv = color.rgb2hsv(np.clip(x, 0.0, 1.0))
    hsv[:, :, 1] = np.clip(hsv[:, :, 1] * params["scale"] + params["shift"], 0.0, 1.0)
    return color.hsv2rgb(hsv)
