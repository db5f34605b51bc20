from pydantic_settings import BaseSettings, SettingsConfigDict
import os
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="ROBUSTLAB_", extra="ignore")

    # Project Settings
    PROJECT_NAME: str = "robustlab"
    VERSION: str = "0.1.0"

    # Logging Settings
    LOG_LEVEL: str = os.getenv("ROBUSTLAB_LOG_LEVEL", "INFO")
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Runtime Settings
    DEFAULT_THREADS: int = int(os.getenv("ROBUSTLAB_DEFAULT_THREADS", "1"))
    OUTPUT_DIR: str = os.getenv("ROBUSTLAB_OUTPUT_DIR", "runs")
    DEFAULT_SEED: int = 0

    # Checkpoint Settings
    CHECKPOINT_MAGIC: bytes = b"CRBT"
    CHECKPOINT_VERSION: int = 1

    # Attack defaults (desk scale, pixel units in [0,1])
    ATTACK_EPSILON: float = 8.0 / 255.0
    ATTACK_STEP_SIZE: float = 2.0 / 255.0
    ATTACK_TRAIN_ITERATIONS: int = 7
    ATTACK_EVAL_ITERATIONS: int = 20

    # Training defaults
    LEARNING_RATE: float = 0.05
    MOMENTUM: float = 0.9
    TEMPERATURE: float = 0.5
    CONTRASTIVE_WEIGHT: float = 1.0
    ADVERSARIAL_WEIGHT: float = 1.0
    BATCH_SIZE: int = int(os.getenv("ROBUSTLAB_BATCH_SIZE", "64"))
    EPOCHS: int = int(os.getenv("ROBUSTLAB_EPOCHS", "30"))

    # Network defaults
    ENCODER_CHANNELS: tuple = (16, 32, 64)
    ENCODER_STRIDES: tuple = (1, 2, 2)
    PROJECTOR_HIDDEN_DIM: int = 64
    PROJECTION_DIM: int = 32

    # Corruption Settings
    REFERENCE_RESOLUTION: int = 32  # severity tables are calibrated at this size
    MIN_BLUR_DIMENSION: int = 8

    # Synthetic data
    SYNTHETIC_MIN_CLASSES: int = 2
    SYNTHETIC_MAX_CLASSES: int = 8
    SYNTHETIC_MIN_SIZE: int = 16

    @property
    def is_debug(self) -> bool:
        return self.LOG_LEVEL.upper() == "DEBUG"


settings = Settings()
