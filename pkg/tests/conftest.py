"""
Shared fixtures: a tiny architecture, a freshly initialized bundle and a small
synthetic dataset that every test area can train or evaluate in well under a second.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root to the path so the package imports without installation
sys.path.insert(0, str(Path(__file__).parent.parent))

from robustlab.models.architecture import Architecture
from robustlab.models.dataset import Dataset
from robustlab.services.network import init_bundle
from robustlab.services.synthetic_service import gen_synthetic


@pytest.fixture
def small_arch():
    """Two-class network on 8x8 images with a single conv layer."""
    return Architecture(
        input_shape=(8, 8, 3),
        conv_channels=(4,),
        conv_strides=(1,),
        num_classes=2,
        projector_hidden=8,
        projection_dim=4,
    )


@pytest.fixture
def small_bundle(small_arch):
    return init_bundle(small_arch, seed=3)


@pytest.fixture
def random_images():
    rng = np.random.default_rng(7)
    return rng.random((6, 8, 8, 3)).astype(np.float32)


@pytest.fixture
def tiny_dataset(random_images):
    labels = np.array([0, 1, 0, 1, 0, 1], dtype=np.int64)
    return Dataset(images=random_images, labels=labels, class_names=["a", "b"], dataset_id="tiny")


@pytest.fixture
def shapes_dataset():
    """Sixteen 16x16 synthetic shapes of two classes."""
    return gen_synthetic(classes=2, per_class=8, size=16, seed=5)
