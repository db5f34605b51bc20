from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from robustlab.core.config import settings
from robustlab.models.attack import AttackConfig
from robustlab.models.corruption import CorruptionKind
from robustlab.models.training import TrainConfig, TrainingRecipe


def evaluation_attack(value: Any) -> Any:
    """Fill a partial attack block from the supervised PGD evaluation defaults."""
    if isinstance(value, dict):
        return {**AttackConfig.for_evaluation().model_dump(mode="json"), **value}
    return value


class GenBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    classes: int = Field(default=4, ge=2, le=8, description="Number of shape classes")
    per_class: int = Field(default=50, ge=1, description="Training images per class")
    size: int = Field(default=32, ge=16, description="Image height and width")
    test_per_class: Optional[int] = Field(default=None, ge=1, description="Also write a held-out split of this size")


class CorruptBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Optional[CorruptionKind] = Field(default=None, description="Corruption to apply; required unless gallery")
    severity: int = Field(default=3, ge=1, le=5)
    threads: int = Field(default=settings.DEFAULT_THREADS, ge=1)
    gallery: bool = Field(default=False, description="Render every kind for the first image instead")


class EvalBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    checkpoint: Optional[str] = Field(default=None, description="Checkpoint file to evaluate")
    label: str = Field(default="model", description="Strategy label stored in the PerfRecord")
    threads: int = Field(default=settings.DEFAULT_THREADS, ge=1)
    attack: AttackConfig = Field(default_factory=AttackConfig.for_evaluation)
    adversarial: bool = Field(default=True, description="Also run the adversarial evaluation")

    @field_validator("attack", mode="before")
    @classmethod
    def _fill_attack_defaults(cls, value: Any) -> Any:
        return evaluation_attack(value)


class TrainBlock(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    recipe: TrainingRecipe = Field(default=TrainingRecipe.ACL)
    config: TrainConfig = Field(default_factory=TrainConfig)


class RunConfig(BaseModel):
    """Everything one CLI invocation needs; written back as ``resolved_config.json``."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    dataset: Optional[str] = Field(default=None, description="Dataset root holding manifest.csv")
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, description="Single source of all randomness")
    output_dir: str = Field(default=settings.OUTPUT_DIR)
    checkpoint: Optional[str] = Field(default=None)
    gen: Optional[GenBlock] = None
    train: Optional[TrainBlock] = None
    attack: Optional[AttackConfig] = None
    corrupt: Optional[CorruptBlock] = None
    eval: Optional[EvalBlock] = None

    @field_validator("attack", mode="before")
    @classmethod
    def _fill_attack_defaults(cls, value: Any) -> Any:
        return evaluation_attack(value)
