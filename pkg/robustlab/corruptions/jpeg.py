"""
Baseline JPEG round trip without entropy coding.

RGB is converted to YCbCr (JFIF), chroma is averaged over 2x2 blocks (4:2:0),
each plane is cut into 8x8 blocks, transformed with an orthonormal DCT,
quantized with the standard tables scaled by quality, then decoded back.
"""

from typing import Dict

import numpy as np
from scipy import fft

LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)

CHROMA_TABLE = np.full((8, 8), 99.0)
CHROMA_TABLE[:4, :4] = [
    [17, 18, 24, 47],
    [18, 21, 26, 66],
    [24, 26, 56, 99],
    [47, 66, 99, 99],
]

BLOCK = 8


def quality_scale(quality: float) -> float:
    """Percentage the base tables are scaled by (libjpeg convention)."""
    quality = min(max(quality, 1.0), 100.0)
    return 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality


def scaled_table(table: np.ndarray, quality: float) -> np.ndarray:
    return np.clip(np.floor((table * quality_scale(quality) + 50.0) / 100.0), 1.0, 255.0)


def rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    """0..255 RGB to 0..255 YCbCr."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def _pad_to(plane: np.ndarray, multiple: int) -> np.ndarray:
    height, width = plane.shape
    pad_h = (-height) % multiple
    pad_w = (-width) % multiple
    return np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    """DCT, quantize, dequantize and invert one plane whose sides are multiples of 8."""
    height, width = plane.shape
    blocks = (plane - 128.0).reshape(height // BLOCK, BLOCK, width // BLOCK, BLOCK).transpose(0, 2, 1, 3)
    coefficients = fft.dctn(blocks, type=2, axes=(2, 3), norm="ortho")
    coefficients = np.round(coefficients / table) * table
    restored = fft.idctn(coefficients, type=2, axes=(2, 3), norm="ortho") + 128.0
    return restored.transpose(0, 2, 1, 3).reshape(height, width)


def jpeg_roundtrip(x: np.ndarray, quality: float) -> np.ndarray:
    """
    Encode and decode an image in [0, 1] at ``quality`` (1..100).

    Returns:
        Decoded image in [0, 1], same shape, rounded to 8-bit levels
    """
    height, width = x.shape[:2]
    rgb = np.round(np.clip(x, 0.0, 1.0) * 255.0)
    ycc = rgb_to_ycbcr(rgb)

    luma_table = scaled_table(LUMA_TABLE, quality)
    chroma_table = scaled_table(CHROMA_TABLE, quality)

    y = _pad_to(ycc[:, :, 0], BLOCK)
    y = _quantize_plane(y, luma_table)[:height, :width]

    chroma = []
    for c in (1, 2):
        plane = _pad_to(ycc[:, :, c], 2 * BLOCK)
        ph, pw = plane.shape
        sub = plane.reshape(ph // 2, 2, pw // 2, 2).mean(axis=(1, 3))
        sub = _quantize_plane(sub, chroma_table)
        full = np.repeat(np.repeat(sub, 2, axis=0), 2, axis=1)[:height, :width]
        chroma.append(full)

    decoded = ycbcr_to_rgb(np.stack([y, chroma[0], chroma[1]], axis=-1))
    return np.clip(np.round(decoded), 0.0, 255.0) / 255.0


def jpeg_compression(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    return jpeg_roundtrip(x, params["quality"])
