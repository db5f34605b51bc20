"""
Noise corruptions.

The random draws depend only on the seed and the image shape, never on the
severity, so raising the severity of a seeded corruption only enlarges the
perturbation of every pixel.
"""

from typing import Dict

import numpy as np
from scipy import stats


def gaussian_noise(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(x.shape)
    return x + params["sigma"] * noise


def shot_noise(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Poisson photon counts at ``photons`` per unit intensity, drawn by inverse CDF."""
    photons = params["photons"]
    quantiles = rng.random(x.shape)
    rate = np.maximum(x * photons, 1e-6)
    counts = stats.poisson.ppf(quantiles, rate)
    counts = np.nan_to_num(counts, nan=0.0, posinf=0.0, neginf=0.0)
    return np.maximum(counts, 0.0) / photons


def impulse_noise(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    """Per-channel salt and pepper; the hit set at a lower amount is a subset of the one at a higher amount."""
    hits = rng.random(x.shape) < params["amount"]
    salt = rng.random(x.shape) < 0.5
    out = x.copy()
    out[hits & salt] = 1.0
    out[hits & ~salt] = 0.0
    return out


def speckle_noise(x: np.ndarray, params: Dict[str, float], rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(x.shape)
    return x + x * noise * params["sigma"]
