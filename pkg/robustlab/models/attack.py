from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from robustlab.core.config import settings


class AttackObjective(str, Enum):
    """Loss the attack ascends."""
    SUPERVISED_CE = "supervised-ce"
    INSTANCEWISE_INFONCE = "instance-wise-infonce"


class AttackConfig(BaseModel):
    """Signed-gradient attack inside an Lp ball (only p = inf is implemented)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    norm: str = Field(default="inf", description="Norm of the perturbation ball; only 'inf' is implemented")
    epsilon: float = Field(default=settings.ATTACK_EPSILON, ge=0.0, le=1.0, description="Ball radius δ in pixel units")
    step_size: float = Field(default=settings.ATTACK_STEP_SIZE, gt=0.0, description="Step size α of each ascent step")
    iterations: int = Field(default=settings.ATTACK_TRAIN_ITERATIONS, ge=1, description="Number of ascent steps")
    random_init: bool = Field(default=True, description="Start from a uniform draw inside the ball")
    objective: AttackObjective = Field(default=AttackObjective.INSTANCEWISE_INFONCE, description="Loss to maximize")
    targeted: bool = Field(default=False, description="Descend on the target-class loss instead of ascending on the true one")
    target_class: Optional[int] = Field(default=None, ge=0, description="Target class when targeted")

    @model_validator(mode="after")
    def _check_target(self) -> "AttackConfig":
        if self.targeted and self.target_class is None:
            raise ValueError("targeted attack requires target_class")
        return self

    @classmethod
    def for_evaluation(cls, **overrides) -> "AttackConfig":
        """Supervised PGD with the evaluation iteration count."""
        values = {
            "objective": AttackObjective.SUPERVISED_CE,
            "iterations": settings.ATTACK_EVAL_ITERATIONS,
        }
        values.update(overrides)
        return cls(**values)


@dataclass
class AdversarialPair:
    """Clean batch, its adversarial counterpart, and per-sample losses before/after."""
    clean: np.ndarray
    adversarial: np.ndarray
    loss_before: np.ndarray
    loss_after: np.ndarray

    @property
    def linf_distance(self) -> np.ndarray:
        diff = np.abs(self.adversarial.astype(np.float64) - self.clean.astype(np.float64))
        return diff.reshape(diff.shape[0], -1).max(axis=1)


class AttackImageSummary(BaseModel):
    """Per-image line of the attack summary document."""
    index: int
    path: str
    label: int
    loss_before: float
    loss_after: float
    loss_delta: float
    linf_distance: float
    within_ball: bool
    in_range: bool


class AttackSummary(BaseModel):
    """JSON summary written by the ``attack`` command."""
    config: AttackConfig
    checkpoint: str
    images: List[AttackImageSummary] = Field(default_factory=list)
    violations: int = Field(default=0, description="Images failing the ball or range audit")
    mean_loss_delta: float = 0.0
