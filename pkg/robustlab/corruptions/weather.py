"""Weather corruptions: snow, frost, fog, brightness and spatter."""

from typing import Dict

import numpy as np
from scipy import ndimage
from skimage import color

from robustlab.corruptions.blur import line_kernel, zoom
from robustlab.corruptions.fractal import plasma_field

LUMA = np.array([0.299, 0.587, 0.114])
FROST_TINT = np.array([0.92, 0.96, 1.0])
RAIN_COLOR = np.array([0.63, 0.72, 0.88])
MUD_COLOR = np.array([0.24, 0.16, 0.08])


def _field_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 63))


def snow(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Thresholded noise flakes smeared along a falling direction over a whitened image."""
    height, width = x.shape[:2]
    layer = rng.normal(params["layer_mean"], params["layer_std"], size=(height, width))
    angle = rng.uniform(-135.0, -45.0)

    layer = zoom(layer[:, :, None], params["zoom"])[:, :, 0]
    layer[layer < params["threshold"]] = 0.0
    layer = np.clip(layer, 0.0, 1.0)
    layer = ndimage.convolve(layer, line_kernel(params["length"], angle), mode="reflect")

    mix = params["mix"]
    gray = (x @ LUMA)[:, :, None]
    whitened = mix * x + (1.0 - mix) * np.maximum(x, gray * 1.5 + 0.5)
    flakes = (layer + np.rot90(layer, 2))[:, :, None]
    return whitened + flakes


def frost(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Ridged plasma field as a crystalline ice overlay."""
    height, width = x.shape[:2]
    field = plasma_field(height, width, params["roughness"], _field_seed(rng))
    ridges = (1.0 - np.abs(2.0 * field - 1.0)) ** 3
    overlay = ridges[:, :, None] * FROST_TINT
    return params["image_weight"] * x + params["frost_weight"] * overlay


def fog(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    height, width = x.shape[:2]
    strength = params["strength"]
    field = plasma_field(height, width, params["roughness"], _field_seed(rng))
    peak = x.max()
    return (x + strength * field[:, :, None]) * peak / (peak + strength)


def brightness(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    hsv = color.rgb2hsv(np.clip(x, 0.0, 1.0))
    hsv[:, :, 2] = np.clip(hsv[:, :, 2] + params["shift"], 0.0, 1.0)
    return color.hsv2rgb(hsv)


def spatter(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Droplets where a smoothed plasma field exceeds the threshold; muddy at high severity."""
    height, width = x.shape[:2]
    field = plasma_field(height, width, params["roughness"], _field_seed(rng))
    field = ndimage.gaussian_filter(field, sigma=params["smoothing"], mode="reflect")
    field = (field - field.min()) / max(field.max() - field.min(), 1e-12)

    threshold = params["threshold"]
    alpha = np.clip((field - threshold) / (1.0 - threshold) * 4.0, 0.0, 1.0) * params["opacity"]
    tint = MUD_COLOR if params["mud"] >= 0.5 else RAIN_COLOR
    alpha = alpha[:, :, None]
    return x * (1.0 - alpha) + tint * alpha
