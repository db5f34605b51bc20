from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from robustlab.core.config import settings


class Architecture(BaseModel):
    """Layer sizes of the encoder, classifier and projector heads."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    input_shape: Tuple[int, int, int] = Field(default=(32, 32, 3), description="Image height, width, channels")
    conv_channels: Tuple[int, ...] = Field(default=settings.ENCODER_CHANNELS, description="Output channels per conv layer")
    conv_strides: Tuple[int, ...] = Field(default=settings.ENCODER_STRIDES, description="Stride per conv layer")
    kernel_size: int = Field(default=3, ge=1)
    padding: int = Field(default=1, ge=0)
    num_classes: int = Field(default=10, ge=2, description="Classifier output length N")
    projector_hidden: int = Field(default=settings.PROJECTOR_HIDDEN_DIM, ge=1)
    projection_dim: int = Field(default=settings.PROJECTION_DIM, ge=1, description="Latent vector length")

    @model_validator(mode="after")
    def _check_layers(self) -> "Architecture":
        if len(self.conv_channels) != len(self.conv_strides) or not self.conv_channels:
            raise ValueError("conv_channels and conv_strides must be non-empty and of equal length")
        if self.input_shape[2] != 3:
            raise ValueError("images must have 3 channels")
        return self

    @property
    def feature_dim(self) -> int:
        return self.conv_channels[-1]
