from robustlab.models.architecture import Architecture
from robustlab.models.attack import AdversarialPair, AttackConfig, AttackObjective, AttackSummary
from robustlab.models.corruption import (
    ALL_KINDS,
    CORRUPTION_GROUPS,
    AugmentationSpec,
    CorruptionKind,
    CorruptionSpec,
    SeverityParams,
)
from robustlab.models.dataset import Dataset, DatasetManifest, ManifestEntry
from robustlab.models.evaluation import PerfRecord, RobustnessReport
from robustlab.models.run_config import CorruptBlock, EvalBlock, GenBlock, RunConfig, TrainBlock
from robustlab.models.training import DenominatorMode, LossBreakdown, TrainConfig, TrainHistory, TrainingRecipe
