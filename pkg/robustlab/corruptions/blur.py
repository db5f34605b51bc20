"""Blur corruptions. Kernel sizes arrive already rescaled to the image resolution."""

from typing import Dict

import numpy as np
from scipy import ndimage


def _filter_channels(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return np.stack(
        [ndimage.convolve(x[:, :, c], kernel, mode="reflect") for c in range(x.shape[2])], axis=2
    )


def disk_kernel(radius: float, alias_blur: float, supersample: int = 8) -> np.ndarray:
    """
    Normalized disk of ``radius`` softened by a small Gaussian.

    Each cell holds the fraction of its area inside the disk, estimated on a
    ``supersample`` x ``supersample`` grid, so the kernel widens continuously
    with the radius instead of jumping at integer distances.
    """
    extent = max(1, int(np.ceil(radius + 0.5)))
    cells = 2 * extent + 1
    offsets = (np.arange(supersample) + 0.5) / supersample - 0.5
    fine = (np.arange(-extent, extent + 1)[:, None] + offsets[None, :]).ravel()
    xs, ys = np.meshgrid(fine, fine)
    inside = ((xs ** 2 + ys ** 2) <= radius ** 2).astype(np.float64)
    disk = inside.reshape(cells, supersample, cells, supersample).mean(axis=(1, 3))
    if disk.sum() == 0:
        disk[extent, extent] = 1.0
    disk /= disk.sum()
    if alias_blur > 0:
        disk = ndimage.gaussian_filter(disk, sigma=alias_blur, mode="constant")
        disk /= disk.sum()
    return disk


def line_kernel(length: float, angle_degrees: float) -> np.ndarray:
    """Normalized line of ``length`` pixels through the kernel center, splatted bilinearly."""
    half = max(0.0, (length - 1) / 2.0)
    extent = int(np.ceil(half)) + 1
    size = 2 * extent + 1
    kernel = np.zeros((size, size), dtype=np.float64)
    theta = np.deg2rad(angle_degrees)
    ts = np.linspace(-half, half, max(2, int(np.ceil(16 * max(length, 1.0)))))
    rows = extent - ts * np.sin(theta)
    cols = extent + ts * np.cos(theta)
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    fr = rows - r0
    fc = cols - c0
    np.add.at(kernel, (r0, c0), (1 - fr) * (1 - fc))
    np.add.at(kernel, (r0 + 1, c0), fr * (1 - fc))
    np.add.at(kernel, (r0, c0 + 1), (1 - fr) * fc)
    np.add.at(kernel, (r0 + 1, c0 + 1), fr * fc)
    return kernel / kernel.sum()


def defocus_blur(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    return _filter_channels(x, disk_kernel(params["radius"], params["alias_blur"]))


def glass_blur(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Gaussian blur, local pixel swaps within ``max_delta``, then blur again."""
    sigma = params["sigma"]
    delta = max(1, int(round(params["max_delta"])))
    iterations = int(params["iterations"])
    height, width = x.shape[:2]

    out = ndimage.gaussian_filter(x, sigma=(sigma, sigma, 0), mode="reflect")
    shifts = rng.integers(-delta, delta, size=(iterations, height, width, 2))
    for it in range(iterations):
        for h in range(height - delta - 1, delta - 1, -1):
            for w in range(width - delta - 1, delta - 1, -1):
                dy, dx = shifts[it, h, w]
                hp, wp = h + dy, w + dx
                out[h, w], out[hp, wp] = out[hp, wp].copy(), out[h, w].copy()
    return ndimage.gaussian_filter(out, sigma=(sigma, sigma, 0), mode="reflect")


def motion_blur(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    max_angle = params["max_angle"]
    angle = rng.uniform(-max_angle, max_angle)
    return _filter_channels(x, line_kernel(params["length"], angle))


def zoom(x: np.ndarray, factor: float) -> np.ndarray:
    """Center zoom by ``factor`` >= 1 with bilinear sampling, same output size."""
    if factor == 1.0:
        return x.copy()
    height, width = x.shape[:2]
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    src_rows = cy + (rows - cy) / factor
    src_cols = cx + (cols - cx) / factor
    return np.stack(
        [
            ndimage.map_coordinates(x[:, :, c], [src_rows, src_cols], order=1, mode="nearest")
            for c in range(x.shape[2])
        ],
        axis=2,
    )


def zoom_blur(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Average of ``steps`` center zooms at factors evenly spaced in [1, max_zoom]."""
    factors = np.linspace(1.0, params["max_zoom"], int(params["steps"]))
    out = np.zeros_like(x)
    for factor in factors:
        out += zoom(x, float(factor))
    return out / len(factors)


def gaussian_blur(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    sigma = params["sigma"]
    return ndimage.gaussian_filter(x, sigma=(sigma, sigma, 0), mode="reflect")
