import pytest

from robustlab.models.corruption import ALL_KINDS
from robustlab.models.evaluation import PerfRecord

# Per-corruption scores (percent) of a standard and an adversarially
# contrastive-trained detector, in report order.
STANDARD_SCORES = [
    25.83, 26.89, 24.55, 28.94, 27.87, 29.37, 21.93, 26.71, 31.13, 38.13,
    38.98, 33.25, 40.25, 32.94, 32.08, 31.36, 30.81, 33.74, 36.35,
]
ACL_SCORES = [
    33.75, 33.94, 31.14, 33.24, 37.46, 34.77, 26.48, 32.90, 37.80, 28.04,
    46.41, 27.16, 46.12, 45.43, 46.10, 39.05, 34.39, 41.35, 41.90,
]


def matrix_from_means(percent):
    """A corruption matrix whose five severity scores per kind all equal the given mean."""
    return {kind: [value / 100.0] * 5 for kind, value in zip(ALL_KINDS, percent)}


@pytest.fixture
def standard_matrix():
    return matrix_from_means(STANDARD_SCORES)


@pytest.fixture
def acl_matrix():
    return matrix_from_means(ACL_SCORES)


@pytest.fixture
def records(standard_matrix, acl_matrix):
    standard = PerfRecord(label="Standard", dataset_id="drive-val", clean=0.4304, corrupted=standard_matrix)
    acl = PerfRecord(
        label="Adversarial Contrastive Learning", dataset_id="drive-val", clean=0.4794, corrupted=acl_matrix
    )
    return [standard, acl]
