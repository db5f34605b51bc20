"""
Clean, corrupted and adversarial evaluation plus the corruption aggregates.

Scores are top-1 accuracies stored as Python floats (64-bit). The corruption
matrix is built on the fly: cell (kind, severity) corrupts the whole dataset
with the per-image seeds of ``corrupt_dataset`` for ``base_seed``, quantizes to
8-bit (exactly what the ``corrupt`` command writes to PNG) and classifies.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from robustlab.core.exceptions import ConfigurationError, ContractError
from robustlab.corruptions.suite import corrupt_dataset
from robustlab.models.attack import AttackConfig
from robustlab.models.corruption import ALL_KINDS, SEVERITIES, CorruptionKind, CorruptionRequest
from robustlab.models.dataset import Dataset
from robustlab.models.evaluation import PerfRecord, RobustnessReport
from robustlab.services.attack_service import attack_dataset
from robustlab.services.dataset_service import save_dataset
from robustlab.services.network import ModelBundle, predict
from robustlab.utils.helpers import quantize_8bit

logger = logging.getLogger(__name__)

CellCallback = Callable[[CorruptionKind, int, float], None]


def _check_nonempty(dataset: Dataset) -> None:
    if len(dataset) == 0:
        raise ConfigurationError("Cannot evaluate on an empty dataset")


def accuracy(bundle: ModelBundle, images: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(predict(bundle, images) == labels))


def eval_clean(bundle: ModelBundle, dataset: Dataset) -> float:
    """
    Fraction of images whose predicted class equals the label.

    Raises:
        ConfigurationError: if the dataset is empty
    """
    _check_nonempty(dataset)
    score = accuracy(bundle, dataset.images, dataset.labels)
    logger.info(f"Clean accuracy on {dataset.dataset_id}: {score:.4f}")
    return score


def corrupted_images(
    dataset: Dataset, kind: CorruptionKind, severity: int, base_seed: int, threads: int = 1
) -> np.ndarray:
    """The 8-bit quantized corrupted copy used for cell (kind, severity)."""
    request = CorruptionRequest(kind=kind, severity=severity)
    images = corrupt_dataset(dataset.images, request, base_seed, threads=threads)
    return quantize_8bit(images)


def eval_corruption_matrix(
    bundle: ModelBundle,
    dataset: Dataset,
    base_seed: int,
    threads: int = 1,
    kinds: Optional[Sequence[CorruptionKind]] = None,
    materialize_dir: Optional[str] = None,
    on_cell: Optional[CellCallback] = None,
) -> Dict[CorruptionKind, List[float]]:
    """
    Accuracy for every (kind, severity) cell.

    Args:
        bundle: model to evaluate (read only)
        dataset: clean dataset
        base_seed: parent seed of the per-image corruption seeds
        threads: cells evaluated concurrently; results do not depend on it
        kinds: restrict to these kinds (defaults to all 19)
        materialize_dir: also write every corrupted copy as PNGs under ``<dir>/<kind>/<severity>``
        on_cell: observer called once per finished cell

    Returns:
        Mapping kind -> five accuracies, severity 1 first
    """
    _check_nonempty(dataset)
    kinds = list(kinds or ALL_KINDS)
    cells = [(kind, severity) for kind in kinds for severity in SEVERITIES]

    def run_cell(cell: Tuple[CorruptionKind, int]) -> float:
        kind, severity = cell
        images = corrupted_images(dataset, kind, severity, base_seed)
        if materialize_dir:
            save_dataset(dataset.with_images(images), os.path.join(materialize_dir, kind.value, str(severity)))
        score = accuracy(bundle, images, dataset.labels)
        logger.debug(f"{kind.value}@{severity}: {score:.4f}")
        if on_cell is not None:
            on_cell(kind, severity, score)
        return score

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            scores = list(executor.map(run_cell, cells))
    else:
        scores = [run_cell(cell) for cell in cells]

    matrix: Dict[CorruptionKind, List[float]] = {kind: [] for kind in kinds}
    for (kind, _), score in zip(cells, scores):
        matrix[kind].append(score)
    return matrix


def aggregate_per_corruption(row: Sequence[float]) -> float:
    """
    Mean of the five severity scores of one corruption.

    Raises:
        ContractError: unless exactly five scores are given
    """
    values = np.asarray(row, dtype=np.float64)
    if values.shape != (len(SEVERITIES),):
        raise ContractError(f"Expected {len(SEVERITIES)} severity scores, got {values.size}")
    return float(np.mean(values))


def aggregate_overall(per_corruption: Sequence[float]) -> float:
    """
    Mean of the 19 per-corruption means.

    Raises:
        ContractError: unless exactly 19 values are given
    """
    values = np.asarray(per_corruption, dtype=np.float64)
    if values.shape != (len(ALL_KINDS),):
        raise ContractError(f"Expected {len(ALL_KINDS)} per-corruption means, got {values.size}")
    return float(np.mean(values))


def corruption_robustness(
    matrix: Dict[CorruptionKind, Sequence[float]], weights: Optional[Sequence[float]] = None
) -> float:
    """
    Expected accuracy over corruptions drawn with the given frequencies.

    Args:
        matrix: kind -> five severity scores, all 19 kinds
        weights: non-negative frequency per kind in report order; uniform when omitted

    Returns:
        Weighted mean of the per-corruption means
    """
    means = [aggregate_per_corruption(matrix[kind]) for kind in ALL_KINDS]
    if weights is None:
        return aggregate_overall(means)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(ALL_KINDS),):
        raise ContractError(f"Expected {len(ALL_KINDS)} corruption weights, got {w.size}")
    if np.any(w < 0) or w.sum() <= 0:
        raise ConfigurationError("Corruption weights must be non-negative with a positive sum")
    return float(np.dot(w / w.sum(), np.asarray(means, dtype=np.float64)))


def eval_adversarial(
    bundle: ModelBundle, dataset: Dataset, cfg: AttackConfig, seed: int = 0, batch_size: int = 128
) -> float:
    """
    Accuracy on supervised PGD examples of every image.

    Args:
        bundle: model under attack
        dataset: clean dataset
        cfg: supervised attack configuration
        seed: parent seed of the per-batch attack seeds
        batch_size: images attacked together

    Returns:
        Robust accuracy
    """
    _check_nonempty(dataset)
    pair = attack_dataset(bundle, dataset.images, dataset.labels, cfg, seed=seed, batch_size=batch_size)
    score = accuracy(bundle, pair.adversarial, dataset.labels)
    logger.info(f"Adversarial accuracy (eps={cfg.epsilon:.4f}, steps={cfg.iterations}): {score:.4f}")
    return score


def summarize(record: PerfRecord) -> RobustnessReport:
    per_corruption = {kind: aggregate_per_corruption(record.corrupted[kind]) for kind in ALL_KINDS}
    return RobustnessReport(
        label=record.label,
        dataset_id=record.dataset_id,
        metric=record.metric,
        clean=record.clean,
        adversarial=record.adversarial,
        per_corruption=per_corruption,
        overall=aggregate_overall([per_corruption[k] for k in ALL_KINDS]),
    )


def eval_record(
    bundle: ModelBundle,
    dataset: Dataset,
    base_seed: int,
    attack: Optional[AttackConfig] = None,
    label: str = "model",
    checkpoint_hash: str = "",
    threads: int = 1,
    on_cell: Optional[CellCallback] = None,
) -> PerfRecord:
    """Clean accuracy, the full corruption matrix and (when ``attack`` is given) robust accuracy."""
    clean = eval_clean(bundle, dataset)
    matrix = eval_corruption_matrix(bundle, dataset, base_seed, threads=threads, on_cell=on_cell)
    adversarial = eval_adversarial(bundle, dataset, attack, seed=base_seed) if attack is not None else None
    record = PerfRecord(
        label=label,
        dataset_id=dataset.dataset_id,
        checkpoint_hash=checkpoint_hash,
        clean=clean,
        corrupted=matrix,
        adversarial=adversarial,
        attack=attack,
        base_seed=base_seed,
    )
    logger.info(f"[{label}] clean={clean:.4f} corrupted mean={summarize(record).overall:.4f}")
    return record
