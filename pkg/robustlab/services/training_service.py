"""
Training recipes: standard cross-entropy, adversarial contrastive learning and
plain min-max adversarial training.

Every recipe shuffles with a per-epoch generator derived from the config seed,
uses full batches of ``min(batch_size, len(dataset))`` images (the remainder of
an epoch is dropped so every step sees the same batch size), and applies one
momentum SGD step per batch to all three heads.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from robustlab.core.exceptions import ConfigurationError
from robustlab.corruptions.augment import augment_batch
from robustlab.engine import ops
from robustlab.engine.optim import sgd_step
from robustlab.engine.tensor import Tape, Tensor, backward
from robustlab.models.architecture import Architecture
from robustlab.models.attack import AttackObjective
from robustlab.models.dataset import Dataset
from robustlab.models.training import EpochRecord, LossBreakdown, TrainConfig, TrainHistory, TrainingRecipe
from robustlab.services.attack_service import instancewise_attack, pgd
from robustlab.services.losses import compute_infonce_batch, infonce_losses
from robustlab.services.network import ModelBundle, classify, encode, init_bundle, project
from robustlab.utils.helpers import derive_seed, make_rng

logger = logging.getLogger(__name__)

EpochCallback = Callable[[EpochRecord], None]

# stream keys for derive_seed / make_rng
_SHUFFLE_STREAM = 1
_AUGMENT_STREAM = 2
_ATTACK_STREAM = 3

__all__ = [
    "combined_loss",
    "compute_infonce_batch",
    "train",
    "train_acl",
    "train_adversarial",
    "train_standard",
]


def _check_dataset(dataset: Dataset) -> None:
    if len(dataset) == 0:
        raise ConfigurationError("Cannot train on an empty dataset")
    if dataset.num_classes < 2:
        raise ConfigurationError(f"Training needs at least 2 classes, got {dataset.num_classes}")


def _new_bundle(dataset: Dataset, cfg: TrainConfig) -> ModelBundle:
    architecture = Architecture(
        input_shape=dataset.image_shape,
        num_classes=cfg.num_classes or dataset.num_classes,
        projection_dim=cfg.projection_dim,
    )
    return init_bundle(architecture, seed=cfg.seed)


def _batches(count: int, batch_size: int, seed: int, epoch: int) -> List[np.ndarray]:
    size = min(batch_size, count)
    order = make_rng(derive_seed(seed, _SHUFFLE_STREAM, epoch), 0).permutation(count)
    return [order[start:start + size] for start in range(0, count - size + 1, size)]


def _augment(
    dataset: Dataset, indices: np.ndarray, cfg: TrainConfig, epoch: int
) -> Tuple[np.ndarray, np.ndarray]:
    seeds = [derive_seed(cfg.seed, _AUGMENT_STREAM, epoch, int(i)) for i in indices]
    return augment_batch(dataset.images[indices], cfg.augmentation, seeds)


def _apply_step(bundle: ModelBundle, cfg: TrainConfig) -> None:
    for params in bundle.heads().values():
        sgd_step(params, lr=cfg.learning_rate, momentum=cfg.momentum)


def _shared_features(bundle: ModelBundle, clean: np.ndarray, adversarial: np.ndarray) -> Tensor:
    """Encoder activations of the clean rows followed by the adversarial rows."""
    return encode(bundle, Tensor(np.concatenate([clean, adversarial], axis=0)))


def _adversarial_term(
    bundle: ModelBundle, features: Tensor, labels: np.ndarray, cfg: TrainConfig
) -> Tuple[Tensor, np.ndarray]:
    """β·½·Σ(CE clean + CE adversarial), divided by N when normalized; also returns the logits."""
    batch = labels.shape[0]
    logits = classify(bundle, features)
    summed = ops.softmax_cross_entropy(logits, np.concatenate([labels, labels]), reduction="sum")
    factor = cfg.adversarial_weight * 0.5
    if cfg.normalize_adversarial:
        factor /= batch
    return ops.scale(summed, factor), logits.data[:batch]


def _contrastive_term(bundle: ModelBundle, features: Tensor, batch: int, cfg: TrainConfig) -> Tensor:
    """contrastive_weight · Σ_i InfoNCE_i with clean latents as anchors."""
    latents = project(bundle, features)
    clean = ops.take_rows(latents, 0, batch)
    adversarial = ops.take_rows(latents, batch, 2 * batch)
    per_anchor = infonce_losses(clean, adversarial, cfg.temperature, cfg.denominator_mode)
    return ops.scale(ops.tensor_sum(per_anchor), cfg.contrastive_weight)


def combined_loss(
    bundle: ModelBundle,
    clean: np.ndarray,
    adversarial: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> Tuple[LossBreakdown, Tensor, Optional[np.ndarray]]:
    """
    Contrastive and adversarial terms from one shared encoder pass.

    A term whose weight is zero is not built at all, so the head that only it
    feeds (projector or classifier) gets an exactly zero gradient.

    Args:
        bundle: model being trained
        clean: the clean view batch (N, H, W, 3)
        adversarial: its adversarial counterpart x̂
        labels: class labels (N,)
        cfg: loss weights, temperature and denominator mode

    Returns:
        (breakdown, total loss tensor to differentiate, clean-row logits or None)
    """
    batch = labels.shape[0]
    features = _shared_features(bundle, clean, adversarial)

    contrastive = _contrastive_term(bundle, features, batch, cfg) if cfg.contrastive_weight > 0 else None
    adversarial_term, logits = (
        _adversarial_term(bundle, features, labels, cfg) if cfg.adversarial_weight > 0 else (None, None)
    )

    if contrastive is not None and adversarial_term is not None:
        total = ops.add(ops.scale(contrastive, 1.0 / batch), adversarial_term)
    elif contrastive is not None:
        total = ops.scale(contrastive, 1.0 / batch)
    elif adversarial_term is not None:
        total = adversarial_term
    else:
        total = ops.scale(ops.tensor_sum(features), 0.0)

    breakdown = LossBreakdown.combine(
        contrastive=contrastive.item() if contrastive is not None else 0.0,
        adversarial=adversarial_term.item() if adversarial_term is not None else 0.0,
        batch_size=batch,
    )
    return breakdown, total, logits


def _accuracy(logits: Optional[np.ndarray], bundle: ModelBundle, images: np.ndarray, labels: np.ndarray) -> int:
    if logits is None:
        view = bundle.detached()
        logits = classify(view, encode(view, Tensor(images))).data
    return int(np.sum(np.argmax(logits, axis=1) == labels))


def _epoch_record(epoch: int, steps: List[LossBreakdown], correct: int, seen: int) -> EpochRecord:
    batch = steps[0].batch_size
    loss = LossBreakdown.combine(
        contrastive=float(np.mean([s.contrastive for s in steps])),
        adversarial=float(np.mean([s.adversarial for s in steps])),
        batch_size=batch,
    )
    return EpochRecord(epoch=epoch, loss=loss, train_accuracy=correct / seen if seen else 0.0)


def _run(
    dataset: Dataset,
    cfg: TrainConfig,
    recipe: TrainingRecipe,
    step_fn: Callable[[ModelBundle, np.ndarray, int, int], Tuple[LossBreakdown, int]],
    on_epoch: Optional[EpochCallback],
) -> Tuple[ModelBundle, TrainHistory]:
    _check_dataset(dataset)
    bundle = _new_bundle(dataset, cfg)
    history = TrainHistory(recipe=recipe)

    for epoch in range(cfg.epochs):
        steps: List[LossBreakdown] = []
        correct = seen = 0
        for step, indices in enumerate(_batches(len(dataset), cfg.batch_size, cfg.seed, epoch)):
            breakdown, hits = step_fn(bundle, indices, epoch, step)
            steps.append(breakdown)
            correct += hits
            seen += len(indices)
        record = _epoch_record(epoch, steps, correct, seen)
        history.epochs.append(record)
        logger.info(
            f"[{recipe.value}] epoch {epoch + 1}/{cfg.epochs}: loss={record.loss.total:.4f} "
            f"(contrastive={record.loss.contrastive:.4f}, adversarial={record.loss.adversarial:.4f}) "
            f"acc={record.train_accuracy:.3f}"
        )
        if on_epoch is not None:
            on_epoch(record)
    return bundle, history


LossBuilder = Callable[[], Tuple[LossBreakdown, Tensor, Optional[np.ndarray]]]


def _gradient_step(
    bundle: ModelBundle, cfg: TrainConfig, build_loss: LossBuilder
) -> Tuple[LossBreakdown, Optional[np.ndarray]]:
    bundle.zero_grad()
    with Tape() as tape:
        breakdown, total, logits = build_loss()
    backward(tape, total)
    _apply_step(bundle, cfg)
    return breakdown, logits


def train_standard(
    dataset: Dataset, cfg: TrainConfig, on_epoch: Optional[EpochCallback] = None
) -> Tuple[ModelBundle, TrainHistory]:
    """
    Minibatch SGD on cross-entropy.

    With ``cfg.augment_standard`` off the loss is the mean CE of the clean batch.
    With it on, each image is drawn into the same two views the ACL recipe uses
    and the loss is the adversarial term of ``combined_loss`` with the second view
    as clean and the first as its (unperturbed) counterpart.

    Returns:
        (trained bundle, per-epoch history)
    """

    def step_fn(bundle: ModelBundle, indices: np.ndarray, epoch: int, step: int):
        labels = dataset.labels[indices]
        if cfg.augment_standard:
            view_a, view_b = _augment(dataset, indices, cfg, epoch)
            supervised = cfg.model_copy(update={"contrastive_weight": 0.0})
            breakdown, logits = _gradient_step(
                bundle, cfg, lambda: combined_loss(bundle, view_b, view_a.copy(), labels, supervised)
            )
            return breakdown, _accuracy(logits, bundle, view_b, labels)

        images = dataset.images[indices]

        def build():
            logits = classify(bundle, encode(bundle, Tensor(images)))
            loss = ops.softmax_cross_entropy(logits, labels, reduction="mean")
            breakdown = LossBreakdown.combine(contrastive=0.0, adversarial=loss.item(), batch_size=len(indices))
            return breakdown, loss, logits.data

        breakdown, logits = _gradient_step(bundle, cfg, build)
        return breakdown, _accuracy(logits, bundle, images, labels)

    return _run(dataset, cfg, TrainingRecipe.STANDARD, step_fn, on_epoch)


def train_acl(
    dataset: Dataset, cfg: TrainConfig, on_epoch: Optional[EpochCallback] = None
) -> Tuple[ModelBundle, TrainHistory]:
    """
    Adversarial contrastive learning.

    Per batch: draw two views of every image, perturb the first view (instance-wise
    InfoNCE attack against the second, or supervised PGD when the attack objective
    says so), compute ``combined_loss`` with the second view as clean, and take one
    SGD step on encoder, classifier and projector together.

    Returns:
        (trained bundle, per-epoch history of LossBreakdown and accuracy)
    """
    if cfg.contrastive_weight > 0 and min(cfg.batch_size, len(dataset)) < 2:
        raise ConfigurationError("Adversarial contrastive learning needs at least 2 images per batch")

    def step_fn(bundle: ModelBundle, indices: np.ndarray, epoch: int, step: int):
        labels = dataset.labels[indices]
        view_a, view_b = _augment(dataset, indices, cfg, epoch)
        attack_seed = derive_seed(cfg.seed, _ATTACK_STREAM, epoch, step)
        if cfg.attack.objective is AttackObjective.INSTANCEWISE_INFONCE:
            adversarial = instancewise_attack(
                bundle,
                view_a,
                view_b,
                cfg.attack,
                seed=attack_seed,
                temperature=cfg.temperature,
                denominator_mode=cfg.denominator_mode,
            )
        else:
            adversarial = pgd(bundle, view_a, labels, cfg.attack, seed=attack_seed).adversarial

        breakdown, logits = _gradient_step(
            bundle, cfg, lambda: combined_loss(bundle, view_b, adversarial, labels, cfg)
        )
        return breakdown, _accuracy(logits, bundle, view_b, labels)

    return _run(dataset, cfg, TrainingRecipe.ACL, step_fn, on_epoch)


def train_adversarial(
    dataset: Dataset, cfg: TrainConfig, on_epoch: Optional[EpochCallback] = None
) -> Tuple[ModelBundle, TrainHistory]:
    """Min-max adversarial training: every batch is replaced by its supervised PGD examples."""
    attack = cfg.attack.model_copy(update={"objective": AttackObjective.SUPERVISED_CE})

    def step_fn(bundle: ModelBundle, indices: np.ndarray, epoch: int, step: int):
        labels = dataset.labels[indices]
        images = dataset.images[indices]
        adversarial = pgd(
            bundle, images, labels, attack, seed=derive_seed(cfg.seed, _ATTACK_STREAM, epoch, step)
        ).adversarial

        def build():
            logits = classify(bundle, encode(bundle, Tensor(adversarial)))
            loss = ops.scale(ops.softmax_cross_entropy(logits, labels, reduction="mean"), cfg.adversarial_weight)
            breakdown = LossBreakdown.combine(contrastive=0.0, adversarial=loss.item(), batch_size=len(indices))
            return breakdown, loss, None

        breakdown, _ = _gradient_step(bundle, cfg, build)
        return breakdown, _accuracy(None, bundle, images, labels)

    return _run(dataset, cfg, TrainingRecipe.ADVERSARIAL, step_fn, on_epoch)


RECIPES = {
    TrainingRecipe.STANDARD: train_standard,
    TrainingRecipe.ACL: train_acl,
    TrainingRecipe.ADVERSARIAL: train_adversarial,
}


def train(
    dataset: Dataset,
    cfg: TrainConfig,
    recipe: TrainingRecipe = TrainingRecipe.ACL,
    on_epoch: Optional[EpochCallback] = None,
) -> Tuple[ModelBundle, TrainHistory]:
    """Run the named recipe."""
    return RECIPES[TrainingRecipe(recipe)](dataset, cfg, on_epoch=on_epoch)
