"""
Tests for the 19 corruptions and the batch driver.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from robustlab.core.exceptions import (
    ConfigurationError,
    CorruptionBatchError,
    DimensionError,
    InputTooSmallError,
)
from robustlab.corruptions import apply_corruption, corrupt_dataset, corruption_gallery, dump_severity_tables
from robustlab.corruptions.blur import disk_kernel, line_kernel
from robustlab.corruptions.severity import SPATIAL_FLOORS, scaled_values, severity_params
from robustlab.models.corruption import (
    ALL_KINDS,
    CORRUPTION_GROUPS,
    CorruptionKind,
    CorruptionRequest,
    CorruptionSpec,
)
from robustlab.services.synthetic_service import gen_synthetic


@pytest.fixture
def image():
    rng = np.random.default_rng(11)
    return rng.random((16, 16, 3)).astype(np.float32)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
@pytest.mark.parametrize("severity", [1, 2, 3, 4, 5])
def test_every_kind_keeps_shape_dtype_and_range(image, kind, severity):
    out = apply_corruption(image, CorruptionSpec(kind=kind, severity=severity, seed=4))
    assert out.shape == image.shape
    assert out.dtype == np.float32
    assert out.min() >= 0.0 and out.max() <= 1.0
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_same_seed_gives_identical_output(image, kind):
    spec = CorruptionSpec(kind=kind, severity=3, seed=9)
    np.testing.assert_array_equal(apply_corruption(image, spec), apply_corruption(image, spec))


def test_different_seeds_differ_for_noise(image):
    a = apply_corruption(image, CorruptionSpec(kind="gaussian_noise", severity=3, seed=1))
    b = apply_corruption(image, CorruptionSpec(kind="gaussian_noise", severity=3, seed=2))
    assert not np.array_equal(a, b)


def test_noise_grows_with_severity():
    gray = np.full((16, 16, 3), 0.5, dtype=np.float32)
    deviation = [
        np.abs(apply_corruption(gray, CorruptionSpec(kind="gaussian_noise", severity=s, seed=3)) - 0.5).mean()
        for s in range(1, 6)
    ]
    assert all(a <= b for a, b in zip(deviation, deviation[1:]))
    assert deviation[0] < deviation[-1]


def test_contrast_keeps_constant_image():
    flat = np.full((8, 8, 3), 0.3, dtype=np.float32)
    out = apply_corruption(flat, CorruptionSpec(kind="contrast", severity=5, seed=0))
    np.testing.assert_allclose(out, flat, atol=1e-6)


def test_jpeg_output_is_on_8bit_levels(image):
    out = apply_corruption(image, CorruptionSpec(kind="jpeg_compression", severity=5, seed=0))
    levels = out.astype(np.float64) * 255.0
    np.testing.assert_allclose(levels, np.round(levels), atol=1e-3)


def test_severity_out_of_range():
    with pytest.raises(ConfigurationError):
        severity_params(CorruptionKind.FOG, 6)
    with pytest.raises(ValidationError):
        CorruptionSpec(kind="fog", severity=0)


def test_spatial_parameters_scale_with_resolution():
    params = severity_params(CorruptionKind.GAUSSIAN_BLUR, 5)
    assert scaled_values(params, 64, 64)["sigma"] == pytest.approx(2 * params.values["sigma"])
    noise = severity_params(CorruptionKind.GAUSSIAN_NOISE, 5)
    assert scaled_values(noise, 64, 64)["sigma"] == noise.values["sigma"]


def test_dump_covers_every_cell():
    tables = dump_severity_tables()
    assert list(tables) == [k.value for k in ALL_KINDS]
    assert all([cell["severity"] for cell in cells] == [1, 2, 3, 4, 5] for cells in tables.values())


@pytest.mark.parametrize("kind", ["gaussian_blur", "elastic_transform", "zoom_blur"])
def test_spatial_kinds_reject_tiny_images(kind):
    with pytest.raises(InputTooSmallError):
        apply_corruption(np.zeros((4, 4, 3)), CorruptionSpec(kind=kind, severity=1))


def test_pointwise_kinds_accept_tiny_images():
    out = apply_corruption(np.full((4, 4, 3), 0.5), CorruptionSpec(kind="brightness", severity=2))
    assert out.shape == (4, 4, 3)


def test_rejects_non_rgb_input():
    with pytest.raises(DimensionError):
        apply_corruption(np.zeros((8, 8)), CorruptionSpec(kind="contrast", severity=1))


def test_threaded_batch_matches_sequential(image):
    images = np.stack([image, image[::-1], image[:, ::-1], 1.0 - image])
    request = CorruptionRequest(kind="shot_noise", severity=2)
    sequential = corrupt_dataset(images, request, base_seed=5, threads=1)
    threaded = corrupt_dataset(images, request, base_seed=5, threads=3)
    np.testing.assert_array_equal(sequential, threaded)


def test_batch_row_matches_single_call(image):
    images = np.stack([image, 1.0 - image])
    request = CorruptionRequest(kind="fog", severity=4)
    batch = corrupt_dataset(images, request, base_seed=2)
    assert batch.shape == images.shape
    assert not np.array_equal(batch[0], batch[1])


def test_deterministic_kind_commutes_with_permutation(image):
    images = np.stack([image, image * 0.5, 1.0 - image])
    order = [2, 0, 1]
    request = CorruptionRequest(kind="gaussian_blur", severity=3)
    permuted_first = corrupt_dataset(images[order], request, base_seed=0)
    corrupted_first = corrupt_dataset(images, request, base_seed=0)[order]
    np.testing.assert_array_equal(permuted_first, corrupted_first)


def test_empty_batch_is_rejected():
    with pytest.raises(DimensionError):
        corrupt_dataset(np.zeros((0, 8, 8, 3)), CorruptionRequest(kind="contrast", severity=1), base_seed=0)


def test_failing_image_is_named(image):
    images = [image, np.zeros((16, 16, 4))]
    with pytest.raises(CorruptionBatchError) as excinfo:
        corrupt_dataset(images, CorruptionRequest(kind="contrast", severity=1), base_seed=0)
    assert excinfo.value.index == 1


def test_gallery_has_one_image_per_kind(image):
    gallery = corruption_gallery(image, severity=2, seed=0)
    assert list(gallery) == ALL_KINDS
    subset = corruption_gallery(image, severity=2, seed=0, kinds=[CorruptionKind.SNOW])
    np.testing.assert_array_equal(subset[CorruptionKind.SNOW], gallery[CorruptionKind.SNOW])


LADDER_KINDS = CORRUPTION_GROUPS["Noise"] + CORRUPTION_GROUPS["Blur"]


@pytest.fixture(scope="module", params=[16, 32], ids=lambda size: f"{size}px")
def shapes(request):
    """Fifty synthetic shapes at 16 and 32 pixels."""
    return gen_synthetic(classes=5, per_class=10, size=request.param, seed=21).images


@pytest.mark.parametrize("kind", LADDER_KINDS, ids=lambda k: k.value)
def test_noise_and_blur_strictly_worsen_with_severity(shapes, kind):
    deviation = []
    for severity in range(1, 6):
        corrupted = corrupt_dataset(shapes, CorruptionRequest(kind=kind, severity=severity), base_seed=13)
        deviation.append(float(np.abs(corrupted.astype(np.float64) - shapes).mean()))
    assert deviation[0] > 0.0
    assert all(a < b for a, b in zip(deviation, deviation[1:])), deviation


def test_jpeg_quality_strictly_decreases():
    quality = [severity_params(CorruptionKind.JPEG_COMPRESSION, s).values["quality"] for s in range(1, 6)]
    assert all(a > b for a, b in zip(quality, quality[1:]))


@pytest.mark.parametrize("size", [16, 32, 64])
def test_gaussian_blur_sigma_strictly_increases(size):
    sigma = [
        scaled_values(severity_params(CorruptionKind.GAUSSIAN_BLUR, s), size, size)["sigma"] for s in range(1, 6)
    ]
    assert all(a < b for a, b in zip(sigma, sigma[1:]))


@pytest.mark.parametrize("size", [16, 32, 64])
@pytest.mark.parametrize(
    "kind, name", [(CorruptionKind.DEFOCUS_BLUR, "radius"), (CorruptionKind.MOTION_BLUR, "length")]
)
def test_floored_kernel_sizes_strictly_increase(kind, name, size):
    values = [scaled_values(severity_params(kind, s), size, size)[name] for s in range(1, 6)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert all(v >= floor for v, floor in zip(values, SPATIAL_FLOORS[kind][name]))


def test_floors_leave_reference_resolution_untouched():
    for kind in SPATIAL_FLOORS:
        for severity in range(1, 6):
            params = severity_params(kind, severity)
            assert scaled_values(params, 32, 32) == params.values


@pytest.mark.parametrize("radius", [0.6, 0.75, 1.0, 1.25, 1.5])
def test_disk_kernel_is_normalized_and_widens(radius):
    kernel = disk_kernel(radius, alias_blur=0.0)
    wider = disk_kernel(radius + 0.25, alias_blur=0.0)
    assert kernel.sum() == pytest.approx(1.0)
    assert wider.sum() == pytest.approx(1.0)
    # the center weight shrinks as coverage spreads to the neighbours
    assert wider[wider.shape[0] // 2, wider.shape[1] // 2] < kernel[kernel.shape[0] // 2, kernel.shape[1] // 2]


@pytest.mark.parametrize("angle", [-45.0, 0.0, 30.0, 90.0])
def test_line_kernel_is_normalized_and_not_a_point(angle):
    kernel = line_kernel(3.0, angle)
    assert kernel.sum() == pytest.approx(1.0)
    assert kernel.max() < 1.0
    assert np.all(kernel >= 0.0)
