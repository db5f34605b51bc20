from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from robustlab.models.attack import AttackConfig
from robustlab.models.corruption import ALL_KINDS, CorruptionKind, SEVERITIES

METRIC_LABEL = "top-1 accuracy"


class PerfRecord(BaseModel):
    """Clean, corrupted and adversarial scores of one model on one dataset."""
    label: str = Field(default="model", description="Training strategy shown as the report column name")
    dataset_id: str = Field(..., description="Identifier of the evaluated dataset")
    checkpoint_hash: str = Field(default="", description="SHA-256 of the evaluated checkpoint file")
    metric: str = Field(default=METRIC_LABEL)
    clean: float = Field(..., ge=0.0, le=1.0, description="Score on the clean dataset")
    corrupted: Dict[CorruptionKind, List[float]] = Field(
        ..., description="19 kinds × 5 severities of scores, severity 1 first"
    )
    adversarial: Optional[float] = Field(default=None, ge=0.0, le=1.0, description="Robust score under `attack`")
    attack: Optional[AttackConfig] = Field(default=None)
    base_seed: int = Field(default=0, description="Seed the corruption draws were derived from")

    @field_validator("corrupted")
    @classmethod
    def _check_matrix(cls, value: Dict[CorruptionKind, List[float]]) -> Dict[CorruptionKind, List[float]]:
        missing = [k.value for k in ALL_KINDS if k not in value]
        if missing:
            raise ValueError(f"corruption matrix is missing kinds: {missing}")
        for kind, row in value.items():
            if len(row) != len(SEVERITIES):
                raise ValueError(f"{kind.value}: expected {len(SEVERITIES)} severity scores, got {len(row)}")
            if any(not (0.0 <= s <= 1.0) for s in row):
                raise ValueError(f"{kind.value}: scores must lie in [0, 1]")
        return {k: list(value[k]) for k in ALL_KINDS}

    def matrix_rows(self) -> List[List[float]]:
        return [self.corrupted[k] for k in ALL_KINDS]


class RobustnessReport(BaseModel):
    """Aggregated view of one PerfRecord."""
    label: str
    dataset_id: str
    metric: str = METRIC_LABEL
    clean: float
    adversarial: Optional[float] = None
    per_corruption: Dict[CorruptionKind, float] = Field(..., description="Mean over the five severities per kind")
    overall: float = Field(..., description="Mean of the 19 per-corruption means")

    @model_validator(mode="after")
    def _check_aggregates(self) -> "RobustnessReport":
        if len(self.per_corruption) != len(ALL_KINDS):
            raise ValueError("per_corruption must hold all 19 kinds")
        return self


class ReportRow(BaseModel):
    group: str
    name: str
    values: List[Optional[float]]
    best_index: Optional[int] = None
    difference: Optional[float] = None


class ReportDocument(BaseModel):
    """Machine-readable report (the JSON twin of the text table)."""
    dataset_id: str
    metric: str = METRIC_LABEL
    unit: str = Field(default="fraction", description="'fraction' in memory, 'percent' once rounded for output")
    columns: List[str]
    rows: List[ReportRow]

    def in_percent(self, decimals: int = 2) -> "ReportDocument":
        """Values and differences as percentages rounded to ``decimals``, the numbers both renderings print."""
        if self.unit == "percent":
            return self

        def scale(value: Optional[float]) -> Optional[float]:
            return None if value is None else round(100.0 * value, decimals)

        rows = [
            row.model_copy(update={"values": [scale(v) for v in row.values], "difference": scale(row.difference)})
            for row in self.rows
        ]
        return self.model_copy(update={"unit": "percent", "rows": rows})
