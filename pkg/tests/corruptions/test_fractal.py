"""
Tests for the diamond-square plasma generator.
"""

import numpy as np
import pytest

from robustlab.core.exceptions import ConfigurationError
from robustlab.corruptions.fractal import bilinear_corners, diamond_square, plasma_field


@pytest.mark.parametrize("size", [3, 5, 17, 33])
def test_vanishing_roughness_gives_bilinear_corners(size):
    grid = diamond_square(size, roughness=1e-6, seed=8, normalize=False)
    np.testing.assert_allclose(grid, bilinear_corners(grid), atol=1e-5)


def test_normalized_field_spans_unit_range():
    grid = diamond_square(33, roughness=0.6, seed=1)
    assert grid.min() == pytest.approx(0.0)
    assert grid.max() == pytest.approx(1.0)


def test_same_seed_same_field():
    np.testing.assert_array_equal(diamond_square(17, 0.5, seed=4), diamond_square(17, 0.5, seed=4))
    assert not np.array_equal(diamond_square(17, 0.5, seed=4), diamond_square(17, 0.5, seed=5))


@pytest.mark.parametrize("size", [1, 4, 16, 18])
def test_rejects_sizes_that_are_not_power_of_two_plus_one(size):
    with pytest.raises(ConfigurationError):
        diamond_square(size, 0.5, seed=0)


@pytest.mark.parametrize("roughness", [0.0, -0.1, 1.5])
def test_rejects_roughness_outside_unit_interval(roughness):
    with pytest.raises(ConfigurationError):
        diamond_square(9, roughness, seed=0)


def test_plasma_field_crops_to_image_size():
    field = plasma_field(20, 12, roughness=0.5, seed=3)
    assert field.shape == (20, 12)
    assert field.min() >= 0.0 and field.max() <= 1.0
