"""
Corruption dispatch and the batch driver.

``apply_corruption`` is a pure function of (image, spec): the only randomness
comes from a counter-based generator keyed by ``spec.seed``. The batch driver
derives one seed per image index, so threaded and sequential runs agree bit
for bit.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from robustlab.core.config import settings
from robustlab.core.exceptions import CorruptionBatchError, DimensionError, InputTooSmallError
from robustlab.corruptions import blur, digital, jpeg, noise, weather
from robustlab.corruptions.severity import scaled_values, severity_params
from robustlab.models.corruption import (
    ALL_KINDS,
    SPATIAL_KINDS,
    CorruptionKind,
    CorruptionRequest,
    CorruptionSpec,
)
from robustlab.utils.helpers import derive_seed, make_rng

logger = logging.getLogger(__name__)

CorruptionFn = Callable[[np.ndarray, Dict[str, float], np.random.Generator], np.ndarray]

CORRUPTIONS: Dict[CorruptionKind, CorruptionFn] = {
    CorruptionKind.GAUSSIAN_NOISE: noise.gaussian_noise,
    CorruptionKind.SHOT_NOISE: noise.shot_noise,
    CorruptionKind.IMPULSE_NOISE: noise.impulse_noise,
    CorruptionKind.SPECKLE_NOISE: noise.speckle_noise,
    CorruptionKind.DEFOCUS_BLUR: blur.defocus_blur,
    CorruptionKind.GLASS_BLUR: blur.glass_blur,
    CorruptionKind.MOTION_BLUR: blur.motion_blur,
    CorruptionKind.ZOOM_BLUR: blur.zoom_blur,
    CorruptionKind.GAUSSIAN_BLUR: blur.gaussian_blur,
    CorruptionKind.SNOW: weather.snow,
    CorruptionKind.FROST: weather.frost,
    CorruptionKind.FOG: weather.fog,
    CorruptionKind.BRIGHTNESS: weather.brightness,
    CorruptionKind.SPATTER: weather.spatter,
    CorruptionKind.CONTRAST: digital.contrast,
    CorruptionKind.ELASTIC_TRANSFORM: digital.elastic_transform,
    CorruptionKind.PIXELATE: digital.pixelate,
    CorruptionKind.JPEG_COMPRESSION: jpeg.jpeg_compression,
    CorruptionKind.SATURATE: digital.saturate,
}


def apply_corruption(x: np.ndarray, spec: CorruptionSpec) -> np.ndarray:
    """
    Corrupt one image.

    Args:
        x: image of shape (H, W, 3) with values in [0, 1]
        spec: kind, severity and seed

    Returns:
        float32 image of the same shape, clipped to [0, 1]

    Raises:
        InputTooSmallError: blur and elastic kinds on images smaller than 8 pixels
    """
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[2] != 3:
        raise DimensionError("corruption input must be (H, W, 3)", actual=x.shape)
    height, width = x.shape[:2]
    if spec.kind in SPATIAL_KINDS and min(height, width) < settings.MIN_BLUR_DIMENSION:
        raise InputTooSmallError(
            f"{spec.kind.value} needs images of at least {settings.MIN_BLUR_DIMENSION} pixels, got {height}x{width}"
        )

    params = scaled_values(severity_params(spec.kind, spec.severity), height, width)
    rng = make_rng(spec.seed, 0)
    out = CORRUPTIONS[spec.kind](x.astype(np.float64), params, rng)
    return np.ascontiguousarray(np.clip(out, 0.0, 1.0), dtype=np.float32)


def image_seed(base_seed: int, index: int) -> int:
    return derive_seed(base_seed, index)


def corrupt_dataset(
    images: Sequence[np.ndarray],
    request: CorruptionRequest,
    base_seed: int,
    threads: int = 1,
) -> np.ndarray:
    """
    Corrupt every image, image ``i`` with seed ``derive_seed(base_seed, i)``.

    Args:
        images: non-empty stack or list of (H, W, 3) images
        request: kind and severity
        base_seed: parent seed of the per-image seeds
        threads: worker threads; the result does not depend on it

    Returns:
        float32 array (N, H, W, 3) in input order

    Raises:
        CorruptionBatchError: naming the index of the first image that failed
    """
    if len(images) == 0:
        raise DimensionError("corrupt_dataset needs at least one image")

    def corrupt_one(index: int) -> np.ndarray:
        try:
            return apply_corruption(images[index], request.with_seed(image_seed(base_seed, index)))
        except Exception as e:
            raise CorruptionBatchError(index, e) from e

    indices = range(len(images))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(corrupt_one, indices))
    else:
        results = [corrupt_one(i) for i in indices]

    logger.debug(f"Corrupted {len(results)} images with {request.kind.value}@{request.severity}")
    return np.stack(results)


def corruption_gallery(
    image: np.ndarray, severity: int, seed: int, kinds: Optional[Sequence[CorruptionKind]] = None
) -> Dict[CorruptionKind, np.ndarray]:
    """Every corruption kind applied to one image at one severity."""
    return {
        kind: apply_corruption(image, CorruptionSpec(kind=kind, severity=severity, seed=seed))
        for kind in (kinds or ALL_KINDS)
    }
