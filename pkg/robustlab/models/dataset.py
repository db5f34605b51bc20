from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ManifestEntry(BaseModel):
    """One ``path,label`` line of a manifest."""
    model_config = ConfigDict(frozen=True)

    path: str = Field(..., description="Image path relative to the dataset root")
    label: int = Field(..., ge=0, description="Class index")


class DatasetManifest(BaseModel):
    """Ordered image list with the class-name table and the declared image shape."""
    entries: List[ManifestEntry] = Field(default_factory=list)
    class_names: List[str] = Field(..., min_length=1, description="Class name per label index")
    image_shape: Tuple[int, int, int] = Field(..., description="Height, width, channels of every image")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @model_validator(mode="after")
    def _check_shape(self) -> "DatasetManifest":
        if self.image_shape[2] != 3 or self.image_shape[0] < 1 or self.image_shape[1] < 1:
            raise ValueError(f"image_shape must be (H, W, 3), got {self.image_shape}")
        return self


@dataclass
class Dataset:
    """Labeled images held in memory, NHWC float32 in [0, 1]."""
    images: np.ndarray
    labels: np.ndarray
    class_names: List[str]
    dataset_id: str = "memory"
    paths: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.images.ndim != 4 or self.images.shape[3] != 3:
            raise ValueError(f"images must have shape (N, H, W, 3), got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ValueError(f"labels shape {self.labels.shape} does not match {self.images.shape[0]} images")
        self.labels = self.labels.astype(np.int64)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, indices, dataset_id: Optional[str] = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=self.images[indices],
            labels=self.labels[indices],
            class_names=list(self.class_names),
            dataset_id=dataset_id or self.dataset_id,
            paths=[self.paths[i] for i in indices] if self.paths else [],
        )

    def with_images(self, images: np.ndarray, dataset_id: Optional[str] = None) -> "Dataset":
        """Same labels and paths, replaced pixels (a corrupted copy)."""
        return Dataset(
            images=images,
            labels=self.labels.copy(),
            class_names=list(self.class_names),
            dataset_id=dataset_id or self.dataset_id,
            paths=list(self.paths),
        )
