from enum import Enum
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CorruptionKind(str, Enum):
    """The 19 common corruption types, in report order."""
    GAUSSIAN_NOISE = "gaussian_noise"
    SHOT_NOISE = "shot_noise"
    IMPULSE_NOISE = "impulse_noise"
    SPECKLE_NOISE = "speckle_noise"
    DEFOCUS_BLUR = "defocus_blur"
    GLASS_BLUR = "glass_blur"
    MOTION_BLUR = "motion_blur"
    ZOOM_BLUR = "zoom_blur"
    GAUSSIAN_BLUR = "gaussian_blur"
    SNOW = "snow"
    FROST = "frost"
    FOG = "fog"
    BRIGHTNESS = "brightness"
    SPATTER = "spatter"
    CONTRAST = "contrast"
    ELASTIC_TRANSFORM = "elastic_transform"
    PIXELATE = "pixelate"
    JPEG_COMPRESSION = "jpeg_compression"
    SATURATE = "saturate"


ALL_KINDS: List[CorruptionKind] = list(CorruptionKind)

CORRUPTION_GROUPS: Dict[str, List[CorruptionKind]] = {
    "Noise": [
        CorruptionKind.GAUSSIAN_NOISE,
        CorruptionKind.SHOT_NOISE,
        CorruptionKind.IMPULSE_NOISE,
        CorruptionKind.SPECKLE_NOISE,
    ],
    "Blur": [
        CorruptionKind.DEFOCUS_BLUR,
        CorruptionKind.GLASS_BLUR,
        CorruptionKind.MOTION_BLUR,
        CorruptionKind.ZOOM_BLUR,
        CorruptionKind.GAUSSIAN_BLUR,
    ],
    "Weather": [
        CorruptionKind.SNOW,
        CorruptionKind.FROST,
        CorruptionKind.FOG,
        CorruptionKind.BRIGHTNESS,
        CorruptionKind.SPATTER,
    ],
    "Digital": [
        CorruptionKind.CONTRAST,
        CorruptionKind.ELASTIC_TRANSFORM,
        CorruptionKind.PIXELATE,
        CorruptionKind.JPEG_COMPRESSION,
        CorruptionKind.SATURATE,
    ],
}

# kinds that need a minimum spatial extent
SPATIAL_KINDS = frozenset(CORRUPTION_GROUPS["Blur"] + [CorruptionKind.ELASTIC_TRANSFORM])

SEVERITIES: Tuple[int, ...] = (1, 2, 3, 4, 5)


class CorruptionSpec(BaseModel):
    """One corruption kind at one severity, with the seed of its random draws."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: CorruptionKind = Field(..., description="Corruption type")
    severity: int = Field(..., ge=1, le=5, description="Severity level 1..5")
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Seed for stochastic corruptions")


class SeverityParams(BaseModel):
    """Full numeric parameterization of one (kind, severity) cell."""
    model_config = ConfigDict(frozen=True)

    kind: CorruptionKind
    severity: int = Field(..., ge=1, le=5)
    values: Dict[str, float] = Field(..., description="Named parameters at the reference resolution")
    spatial: List[str] = Field(
        default_factory=list,
        description="Parameters given in pixels at the reference resolution and rescaled with image size",
    )


class AugmentationSpec(BaseModel):
    """The stochastic augmentation family used to draw two views of an image."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    crop_fraction: Tuple[float, float] = Field(
        default=(0.6, 1.0),
        description="Range of the crop's area as a fraction of the image; the crop is resized back",
    )
    flip_probability: float = Field(default=0.5, ge=0.0, le=1.0, description="Horizontal flip probability")
    color_strength: float = Field(
        default=0.4, ge=0.0, le=1.0, description="Brightness/contrast/saturation jitter, each by ±strength"
    )
    grayscale_probability: float = Field(default=0.2, ge=0.0, le=1.0, description="Grayscale conversion probability")
    seed: int = Field(default=0, ge=0, description="Seed of the augmentation draws")

    @field_validator("crop_fraction")
    @classmethod
    def _check_crop(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        low, high = value
        if not (0.0 < low <= high <= 1.0):
            raise ValueError(f"crop_fraction must satisfy 0 < low <= high <= 1, got {value}")
        return value


class CorruptionRequest(BaseModel):
    """Corruption parameters without a seed, used by the batch driver."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: CorruptionKind
    severity: int = Field(..., ge=1, le=5)

    def with_seed(self, seed: int) -> CorruptionSpec:
        return CorruptionSpec(kind=self.kind, severity=self.severity, seed=seed)
