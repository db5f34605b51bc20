"""Diamond-square plasma fields used by fog, frost and spatter."""

import logging
import math

import numpy as np

from robustlab.core.exceptions import ConfigurationError
from robustlab.utils.helpers import make_rng

logger = logging.getLogger(__name__)


def _is_valid_size(size: int) -> bool:
    span = size - 1
    return span >= 1 and span & (span - 1) == 0


def diamond_square(size: int, roughness: float, seed: int, normalize: bool = True) -> np.ndarray:
    """
    Fractal height map on a ``size`` x ``size`` grid.

    The four corners are uniform draws in [0, 1). Each level runs a square step
    (cell centers) and a diamond step (edge midpoints), adding uniform noise of
    amplitude ``roughness ** (level + 1)``. Points on the outer border average
    only their two neighbors along the border, so with vanishing noise the field
    is the bilinear interpolation of the corners.

    Args:
        size: grid side, 2**k + 1
        roughness: noise decay per level, in (0, 1]
        seed: seed of the draws
        normalize: rescale to [0, 1]; a constant field becomes all zeros

    Returns:
        float64 array of shape (size, size)
    """
    if not _is_valid_size(size):
        raise ConfigurationError(f"diamond_square size must be 2**k + 1, got {size}")
    if not 0.0 < roughness <= 1.0:
        raise ConfigurationError(f"diamond_square roughness must be in (0, 1], got {roughness}")

    rng = make_rng(seed, 0)
    n = size - 1
    grid = np.zeros((size, size), dtype=np.float64)
    grid[0, 0], grid[0, n], grid[n, 0], grid[n, n] = rng.random(4)

    step = n
    level = 0
    while step > 1:
        half = step // 2
        amplitude = roughness ** (level + 1)

        corners = grid[0::step, 0::step]
        centers = (corners[:-1, :-1] + corners[1:, :-1] + corners[:-1, 1:] + corners[1:, 1:]) / 4.0
        grid[half::step, half::step] = centers + amplitude * rng.uniform(-1.0, 1.0, centers.shape)

        # midpoints of horizontal edges: rows 0::step, cols half::step
        left = grid[0::step, 0:n:step]
        right = grid[0::step, step::step]
        horizontal = (left + right) / 2.0
        up = grid[half::step, half::step]
        interior = (left[1:-1] + right[1:-1] + up[:-1] + up[1:]) / 4.0
        horizontal[1:-1] = interior
        grid[0::step, half::step] = horizontal + amplitude * rng.uniform(-1.0, 1.0, horizontal.shape)

        # midpoints of vertical edges: rows half::step, cols 0::step
        top = grid[0:n:step, 0::step]
        bottom = grid[step::step, 0::step]
        vertical = (top + bottom) / 2.0
        side = grid[half::step, half::step]
        vertical[:, 1:-1] = (top[:, 1:-1] + bottom[:, 1:-1] + side[:, :-1] + side[:, 1:]) / 4.0
        grid[half::step, 0::step] = vertical + amplitude * rng.uniform(-1.0, 1.0, vertical.shape)

        step = half
        level += 1

    if normalize:
        grid -= grid.min()
        top_value = grid.max()
        if top_value > 0:
            grid /= top_value
    return grid


def plasma_field(height: int, width: int, roughness: float, seed: int) -> np.ndarray:
    """Normalized diamond-square field cropped to ``height`` x ``width``."""
    side = max(height, width, 2)
    size = 2 ** math.ceil(math.log2(side - 1)) + 1
    return diamond_square(size, roughness, seed)[:height, :width]


def bilinear_corners(grid: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of the four corner values of ``grid`` over its extent."""
    size = grid.shape[0]
    t = np.linspace(0.0, 1.0, size)
    rows = t[:, None]
    cols = t[None, :]
    c00, c01, c10, c11 = grid[0, 0], grid[0, -1], grid[-1, 0], grid[-1, -1]
    return c00 * (1 - rows) * (1 - cols) + c01 * (1 - rows) * cols + c10 * rows * (1 - cols) + c11 * rows * cols
