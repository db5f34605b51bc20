"""
Tests for the two-view augmentation family.
"""

import numpy as np
import pytest

from robustlab.corruptions import augment_batch, augment_pair
from robustlab.models.corruption import AugmentationSpec


@pytest.fixture
def image():
    rng = np.random.default_rng(2)
    return rng.random((12, 12, 3)).astype(np.float32)


def test_same_seed_same_pair(image):
    spec = AugmentationSpec(seed=17)
    a1, b1 = augment_pair(image, spec)
    a2, b2 = augment_pair(image, spec)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(b1, b2)


def test_views_are_independent(image):
    a, b = augment_pair(image, AugmentationSpec(seed=3))
    assert a.shape == b.shape == image.shape
    assert a.dtype == np.float32
    assert not np.array_equal(a, b)


def test_identity_family_returns_the_image(image):
    spec = AugmentationSpec(crop_fraction=(1.0, 1.0), flip_probability=0.0, color_strength=0.0, grayscale_probability=0.0)
    a, b = augment_pair(image, spec)
    np.testing.assert_allclose(a, image, atol=1e-7)
    np.testing.assert_allclose(b, image, atol=1e-7)


def test_certain_flip_mirrors(image):
    spec = AugmentationSpec(crop_fraction=(1.0, 1.0), flip_probability=1.0, color_strength=0.0, grayscale_probability=0.0)
    a, _ = augment_pair(image, spec)
    np.testing.assert_allclose(a, image[:, ::-1, :], atol=1e-7)


def test_certain_grayscale_has_equal_channels(image):
    spec = AugmentationSpec(grayscale_probability=1.0, seed=5)
    a, b = augment_pair(image, spec)
    for view in (a, b):
        np.testing.assert_array_equal(view[:, :, 0], view[:, :, 1])
        np.testing.assert_array_equal(view[:, :, 1], view[:, :, 2])


def test_probabilities_do_not_shift_the_draws(image):
    """Crop geometry stays fixed when only the flip probability changes."""
    base = AugmentationSpec(flip_probability=0.0, color_strength=0.0, grayscale_probability=0.0, seed=21)
    flipped = base.model_copy(update={"flip_probability": 1.0})
    a, _ = augment_pair(image, base)
    a_flipped, _ = augment_pair(image, flipped)
    np.testing.assert_allclose(a_flipped, a[:, ::-1, :], atol=1e-7)


def test_views_stay_in_range(image):
    a, b = augment_pair(image, AugmentationSpec(color_strength=1.0, seed=1))
    for view in (a, b):
        assert view.min() >= 0.0 and view.max() <= 1.0


def test_bad_crop_fraction_is_rejected():
    with pytest.raises(ValueError):
        AugmentationSpec(crop_fraction=(0.8, 0.5))


def test_batch_uses_one_seed_per_image(image):
    images = np.stack([image, image])
    spec = AugmentationSpec()
    a, b = augment_batch(images, spec, seeds=[4, 4])
    np.testing.assert_array_equal(a[0], a[1])
    single_a, single_b = augment_pair(image, spec.model_copy(update={"seed": 4}))
    np.testing.assert_array_equal(a[0], single_a)
    np.testing.assert_array_equal(b[0], single_b)
