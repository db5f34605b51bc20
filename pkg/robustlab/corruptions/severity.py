"""
Severity schedules for the 19 corruption kinds.

Every table is calibrated for 32x32 images. Entries listed in ``SPATIAL`` are
lengths in pixels and are multiplied by ``min(H, W) / 32`` before use, so the
same severity has a comparable visual effect at other resolutions. Entries in
``SPATIAL_FLOORS`` are never rescaled below their listed value.
"""

import logging
from typing import Dict, List, Tuple

from robustlab.core.config import settings
from robustlab.core.exceptions import ConfigurationError
from robustlab.models.corruption import ALL_KINDS, CorruptionKind, SeverityParams

logger = logging.getLogger(__name__)

K = CorruptionKind

SEVERITY_TABLES: Dict[CorruptionKind, Dict[str, Tuple[float, ...]]] = {
    # Noise
    K.GAUSSIAN_NOISE: {"sigma": (0.04, 0.07, 0.10, 0.14, 0.18)},
    K.SHOT_NOISE: {"photons": (60, 25, 12, 5, 3)},
    K.IMPULSE_NOISE: {"amount": (0.01, 0.02, 0.03, 0.05, 0.07)},
    K.SPECKLE_NOISE: {"sigma": (0.06, 0.10, 0.12, 0.16, 0.20)},
    # Blur
    K.DEFOCUS_BLUR: {"radius": (1.0, 1.5, 2.0, 2.5, 3.0), "alias_blur": (0.1, 0.1, 0.1, 0.1, 0.1)},
    K.GLASS_BLUR: {
        "sigma": (0.5, 0.7, 0.9, 1.1, 1.4),
        "max_delta": (1, 1, 2, 2, 3),
        "iterations": (1, 2, 3, 4, 5),
    },
    K.MOTION_BLUR: {"length": (3, 5, 7, 9, 11), "max_angle": (45, 45, 45, 45, 45)},
    K.ZOOM_BLUR: {"max_zoom": (1.06, 1.11, 1.16, 1.21, 1.26), "steps": (7, 7, 7, 7, 7)},
    K.GAUSSIAN_BLUR: {"sigma": (0.5, 0.75, 1.0, 1.5, 2.0)},
    # Weather
    K.SNOW: {
        "layer_mean": (0.1, 0.1, 0.15, 0.25, 0.3),
        "layer_std": (0.2, 0.2, 0.3, 0.3, 0.3),
        "zoom": (1.0, 1.0, 1.75, 2.25, 1.25),
        "threshold": (0.6, 0.5, 0.55, 0.6, 0.65),
        "length": (5, 7, 7, 9, 11),
        "mix": (0.95, 0.9, 0.9, 0.85, 0.8),
    },
    K.FROST: {
        "image_weight": (1.0, 0.8, 0.7, 0.65, 0.6),
        "frost_weight": (0.4, 0.6, 0.7, 0.7, 0.75),
        "roughness": (0.6, 0.6, 0.6, 0.6, 0.6),
    },
    K.FOG: {"strength": (0.2, 0.5, 0.75, 1.0, 1.5), "roughness": (0.33, 0.33, 0.4, 0.5, 0.57)},
    K.BRIGHTNESS: {"shift": (0.05, 0.1, 0.15, 0.2, 0.3)},
    K.SPATTER: {
        "threshold": (0.75, 0.7, 0.65, 0.6, 0.55),
        "opacity": (0.4, 0.5, 0.6, 0.65, 0.7),
        "smoothing": (1.0, 1.0, 1.0, 1.0, 1.0),
        "roughness": (0.6, 0.6, 0.6, 0.6, 0.6),
        "mud": (0, 0, 0, 1, 1),
    },
    # Digital
    K.CONTRAST: {"factor": (0.75, 0.5, 0.4, 0.3, 0.15)},
    K.ELASTIC_TRANSFORM: {"alpha": (0.6, 0.9, 1.2, 1.6, 2.0), "sigma": (3.0, 3.0, 2.5, 2.5, 2.0)},
    K.PIXELATE: {"factor": (0.95, 0.9, 0.85, 0.75, 0.65)},
    K.JPEG_COMPRESSION: {"quality": (80, 65, 58, 50, 40)},
    K.SATURATE: {"scale": (0.3, 0.1, 2.0, 5.0, 20.0), "shift": (0.0, 0.0, 0.0, 0.1, 0.2)},
}

SPATIAL: Dict[CorruptionKind, Tuple[str, ...]] = {
    K.DEFOCUS_BLUR: ("radius", "alias_blur"),
    K.GLASS_BLUR: ("sigma", "max_delta"),
    K.MOTION_BLUR: ("length",),
    K.GAUSSIAN_BLUR: ("sigma",),
    K.SNOW: ("length",),
    K.SPATTER: ("smoothing",),
    K.ELASTIC_TRANSFORM: ("alpha", "sigma"),
}

# Lower bounds applied after rescaling. Each ladder stays strictly increasing at any size.
SPATIAL_FLOORS: Dict[CorruptionKind, Dict[str, Tuple[float, ...]]] = {
    K.DEFOCUS_BLUR: {"radius": (0.75, 1.0, 1.25, 1.5, 1.75)},
    K.MOTION_BLUR: {"length": (3, 4, 5, 6, 7)},
}


def severity_params(kind: CorruptionKind, severity: int) -> SeverityParams:
    """
    Full numeric parameterization of ``kind`` at ``severity``.

    Args:
        kind: corruption kind
        severity: level 1..5

    Returns:
        SeverityParams with every table entry for this cell
    """
    kind = CorruptionKind(kind)
    if severity not in range(1, 6):
        raise ConfigurationError(f"Severity must be in 1..5, got {severity}")
    table = SEVERITY_TABLES[kind]
    return SeverityParams(
        kind=kind,
        severity=severity,
        values={name: float(levels[severity - 1]) for name, levels in table.items()},
        spatial=list(SPATIAL.get(kind, ())),
    )


def resolution_scale(height: int, width: int) -> float:
    return min(height, width) / settings.REFERENCE_RESOLUTION


def scaled_values(params: SeverityParams, height: int, width: int) -> Dict[str, float]:
    """Parameter values with spatial entries rescaled to an image of ``height`` x ``width``."""
    factor = resolution_scale(height, width)
    floors = SPATIAL_FLOORS.get(params.kind, {})
    values = {}
    for name, value in params.values.items():
        if name in params.spatial:
            value *= factor
        if name in floors:
            value = max(value, float(floors[name][params.severity - 1]))
        values[name] = value
    return values


def dump_severity_tables() -> Dict[str, List[dict]]:
    """Every (kind, severity) cell as plain data, for ``--dump-severity-tables``."""
    return {
        kind.value: [
            {
                "severity": s,
                "values": severity_params(kind, s).values,
                "spatial": list(SPATIAL.get(kind, ())),
                "floors": {name: levels[s - 1] for name, levels in SPATIAL_FLOORS.get(kind, {}).items()},
            }
            for s in range(1, 6)
        ]
        for kind in ALL_KINDS
    }
