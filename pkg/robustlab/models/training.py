from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from robustlab.core.config import settings
from robustlab.models.attack import AttackConfig
from robustlab.models.corruption import AugmentationSpec


class DenominatorMode(str, Enum):
    """Which similarities form the InfoNCE denominator."""
    STANDARD = "standard"      # positive + all other-instance latents
    AS_WRITTEN = "as-written"  # other-instance latents only


class TrainingRecipe(str, Enum):
    STANDARD = "standard"
    ACL = "acl"
    ADVERSARIAL = "adversarial"


class TrainConfig(BaseModel):
    """Hyperparameters of every training recipe."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=settings.EPOCHS, ge=1, description="Passes over the dataset")
    batch_size: int = Field(default=settings.BATCH_SIZE, ge=1, description="Minibatch size N")
    learning_rate: float = Field(default=settings.LEARNING_RATE, ge=0.0, description="SGD learning rate")
    momentum: float = Field(default=settings.MOMENTUM, ge=0.0, lt=1.0, description="SGD momentum")
    temperature: float = Field(default=settings.TEMPERATURE, gt=0.0, description="InfoNCE temperature τ")
    contrastive_weight: float = Field(default=settings.CONTRASTIVE_WEIGHT, ge=0.0, description="Weight of the contrastive sum")
    adversarial_weight: float = Field(default=settings.ADVERSARIAL_WEIGHT, ge=0.0, description="Weight β of the cross-entropy term")
    attack: AttackConfig = Field(default_factory=AttackConfig, description="Attack used to craft x̂")
    augmentation: AugmentationSpec = Field(default_factory=AugmentationSpec, description="View augmentation family")
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, description="Seed for init, shuffling, views and attacks")
    denominator_mode: DenominatorMode = Field(default=DenominatorMode.STANDARD)
    normalize_adversarial: bool = Field(default=True, description="Divide the cross-entropy sum by the batch size")
    augment_standard: bool = Field(
        default=False, description="Standard training consumes the two augmented views instead of clean images"
    )
    num_classes: Optional[int] = Field(default=None, ge=2, description="Class count; inferred from the dataset when unset")
    projection_dim: int = Field(default=settings.PROJECTION_DIM, ge=1)

    @model_validator(mode="after")
    def _check_batch(self) -> "TrainConfig":
        if self.contrastive_weight > 0 and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 when contrastive_weight > 0")
        return self


class LossBreakdown(BaseModel):
    """Contrastive, adversarial and total loss of one step (or their epoch mean)."""
    contrastive: float = Field(..., description="contrastive_weight · Σ InfoNCE over the batch")
    adversarial: float = Field(..., description="β · ½ Σ (CE clean + CE adversarial), per-sample when normalized")
    total: float = Field(..., description="contrastive / N + adversarial")
    batch_size: int = Field(..., ge=1)

    @classmethod
    def combine(cls, contrastive: float, adversarial: float, batch_size: int) -> "LossBreakdown":
        return cls(
            contrastive=contrastive,
            adversarial=adversarial,
            total=contrastive / batch_size + adversarial,
            batch_size=batch_size,
        )


class EpochRecord(BaseModel):
    epoch: int
    loss: LossBreakdown
    train_accuracy: float = Field(..., ge=0.0, le=1.0)


class TrainHistory(BaseModel):
    """Per-epoch history written to ``history.json``."""
    recipe: TrainingRecipe
    epochs: List[EpochRecord] = Field(default_factory=list)
