"""
FGSM, PGD and the instance-wise contrastive attack.

All three share one signed-gradient loop: optional uniform start inside the
L-infinity ball, then ``iterations`` steps of ``x + α·sign(∇loss)`` each
followed by projection onto the ball and the [0, 1] range.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from robustlab.core.config import settings
from robustlab.core.exceptions import ConfigurationError, DimensionError, NoNegativesError, NotImplementedNormError
from robustlab.engine import ops
from robustlab.engine.tensor import Tape, Tensor, backward
from robustlab.models.attack import (
    AdversarialPair,
    AttackConfig,
    AttackImageSummary,
    AttackObjective,
    AttackSummary,
)
from robustlab.models.training import DenominatorMode
from robustlab.services.losses import compute_infonce_batch
from robustlab.services.network import ModelBundle, classify, encode, project
from robustlab.utils.helpers import derive_seed, make_rng

logger = logging.getLogger(__name__)

LossAndGrad = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
StepCallback = Callable[[int, np.ndarray], None]

SUPPORTED_NORMS = ("inf",)

# attack seeds of dataset-level runs are derived per batch from this stream
ADVERSARIAL_STREAM = 4


def project_linf(candidate: np.ndarray, anchor: np.ndarray, epsilon: float) -> np.ndarray:
    """
    Clamp ``candidate`` into [anchor - ε, anchor + ε], then into [0, 1].

    Raises:
        DimensionError: if the shapes differ
    """
    candidate = np.asarray(candidate)
    anchor = np.asarray(anchor)
    if candidate.shape != anchor.shape:
        raise DimensionError("projection needs equal shapes", expected=anchor.shape, actual=candidate.shape)
    dtype = anchor.dtype if anchor.dtype in (np.float32, np.float64) else np.float32
    eps = np.asarray(epsilon, dtype=dtype)
    anchor = anchor.astype(dtype, copy=False)
    projected = np.clip(candidate.astype(dtype, copy=False), anchor - eps, anchor + eps)
    return np.clip(projected, 0.0, 1.0).astype(dtype, copy=False)


def _check_config(cfg: AttackConfig) -> None:
    if cfg.norm not in SUPPORTED_NORMS:
        raise NotImplementedNormError(f"Only the L-infinity attack is implemented, got norm={cfg.norm!r}")


def signed_gradient_attack(
    loss_and_grad: LossAndGrad,
    x: np.ndarray,
    cfg: AttackConfig,
    seed: int = 0,
    descend: bool = False,
    callback: Optional[StepCallback] = None,
) -> np.ndarray:
    """
    Projected signed-gradient ascent (or descent) on an arbitrary loss.

    Args:
        loss_and_grad: maps a batch to (per-sample loss, gradient w.r.t. the batch)
        x: clean batch, the center of the ball
        cfg: radius, step size, iterations and random start
        seed: seed of the random start
        descend: step against the gradient (targeted attacks)
        callback: called with (step index, current batch) after every projection

    Returns:
        Adversarial batch with the dtype of ``x``
    """
    _check_config(cfg)
    x = np.asarray(x)
    if cfg.epsilon == 0:
        return x.copy()

    dtype = x.dtype if x.dtype in (np.float32, np.float64) else np.float32
    x = x.astype(dtype, copy=False)
    step = np.asarray(-cfg.step_size if descend else cfg.step_size, dtype=dtype)

    current = x.copy()
    if cfg.random_init:
        rng = make_rng(seed, 0)
        noise = rng.uniform(-cfg.epsilon, cfg.epsilon, size=x.shape).astype(dtype)
        current = project_linf(x + noise, x, cfg.epsilon)

    for t in range(cfg.iterations):
        _, grad = loss_and_grad(current)
        current = project_linf(current + step * np.sign(grad).astype(dtype), x, cfg.epsilon)
        if callback is not None:
            callback(t, current)
    return current


def supervised_loss_and_grad(bundle: ModelBundle, labels: np.ndarray) -> LossAndGrad:
    """Per-sample cross-entropy of the classifier and its input gradient."""
    view = bundle.detached()

    def loss_and_grad(batch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        with Tape() as tape:
            inputs = Tensor(batch, requires_grad=True)
            losses = ops.softmax_cross_entropy(classify(view, encode(view, inputs)), labels, reduction="none")
            total = ops.tensor_sum(losses)
        backward(tape, total)
        return losses.data.astype(np.float64), inputs.grad

    return loss_and_grad


def supervised_losses(bundle: ModelBundle, x: np.ndarray, labels: np.ndarray) -> np.ndarray:
    view = bundle.detached()
    logits = classify(view, encode(view, Tensor(x)))
    return ops.softmax_cross_entropy(logits, labels, reduction="none").data.astype(np.float64)


def _attack_labels(cfg: AttackConfig, y: np.ndarray) -> Tuple[np.ndarray, bool]:
    if cfg.targeted:
        return np.full_like(np.asarray(y, dtype=np.int64), cfg.target_class), True
    return np.asarray(y, dtype=np.int64), False


def pgd(
    bundle: ModelBundle,
    x: np.ndarray,
    y: np.ndarray,
    cfg: AttackConfig,
    seed: int = 0,
    callback: Optional[StepCallback] = None,
) -> AdversarialPair:
    """
    Projected gradient descent on the classifier's cross-entropy.

    Untargeted attacks ascend the loss of the true label; targeted ones descend
    the loss of ``cfg.target_class``.

    Args:
        bundle: model under attack (only read)
        x: clean batch (B, H, W, 3)
        y: true labels (B,)
        cfg: attack configuration with the supervised objective
        seed: seed of the random start
        callback: optional per-step observer

    Returns:
        AdversarialPair with per-sample true-label losses before and after
    """
    if cfg.objective is not AttackObjective.SUPERVISED_CE:
        raise ConfigurationError(f"pgd needs the supervised-ce objective, got {cfg.objective.value}")
    labels, descend = _attack_labels(cfg, y)
    y = np.asarray(y, dtype=np.int64)

    adversarial = signed_gradient_attack(
        supervised_loss_and_grad(bundle, labels), x, cfg, seed=seed, descend=descend, callback=callback
    )
    pair = AdversarialPair(
        clean=np.asarray(x),
        adversarial=adversarial,
        loss_before=supervised_losses(bundle, np.asarray(x), y),
        loss_after=supervised_losses(bundle, adversarial, y),
    )
    logger.debug(
        f"PGD eps={cfg.epsilon:.4f} steps={cfg.iterations}: "
        f"loss {pair.loss_before.mean():.4f} -> {pair.loss_after.mean():.4f}"
    )
    return pair


def fgsm_config(cfg: AttackConfig) -> AttackConfig:
    """The one-step PGD configuration FGSM is defined as."""
    return cfg.model_copy(update={"iterations": 1, "step_size": cfg.epsilon, "random_init": False})


def fgsm(bundle: ModelBundle, x: np.ndarray, y: np.ndarray, cfg: AttackConfig, seed: int = 0) -> AdversarialPair:
    """Single signed-gradient step of size ε: PGD with one iteration, α = ε and no random start."""
    return pgd(bundle, x, y, fgsm_config(cfg), seed=seed)


def instancewise_attack(
    bundle: ModelBundle,
    view_a: np.ndarray,
    view_b: np.ndarray,
    cfg: AttackConfig,
    seed: int = 0,
    temperature: float = settings.TEMPERATURE,
    denominator_mode: DenominatorMode = DenominatorMode.STANDARD,
    callback: Optional[StepCallback] = None,
) -> np.ndarray:
    """
    Perturb ``view_a`` to maximize the batch InfoNCE against the fixed ``view_b``.

    The latents of ``view_b`` are computed once and held constant; the positive of
    instance i is the perturbed view_a[i].

    Returns:
        Perturbed copy of ``view_a`` inside the ε-ball around it

    Raises:
        NoNegativesError: batch of fewer than two images
    """
    view_a = np.asarray(view_a)
    view_b = np.asarray(view_b)
    if view_a.shape != view_b.shape:
        raise DimensionError("both views need the same shape", expected=view_a.shape, actual=view_b.shape)
    if view_a.shape[0] < 2:
        raise NoNegativesError(f"instance-wise attack needs a batch of at least 2, got {view_a.shape[0]}")
    _check_config(cfg)
    if cfg.epsilon == 0:
        return view_a.copy()

    frozen = bundle.detached()
    anchors = project(frozen, encode(frozen, Tensor(view_b)))

    def loss_and_grad(batch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        with Tape() as tape:
            inputs = Tensor(batch, requires_grad=True)
            latents = project(frozen, encode(frozen, inputs))
            loss = compute_infonce_batch(anchors, latents, temperature, denominator_mode)
        backward(tape, loss)
        return np.full(batch.shape[0], loss.item()), inputs.grad

    return signed_gradient_attack(loss_and_grad, view_a, cfg, seed=seed, callback=callback)


def infonce_value(
    bundle: ModelBundle,
    view_a: np.ndarray,
    view_b: np.ndarray,
    temperature: float = settings.TEMPERATURE,
    denominator_mode: DenominatorMode = DenominatorMode.STANDARD,
) -> float:
    """Batch InfoNCE between the latents of ``view_b`` (anchors) and ``view_a`` (positives)."""
    frozen = bundle.detached()
    anchors = project(frozen, encode(frozen, Tensor(view_b)))
    latents = project(frozen, encode(frozen, Tensor(view_a)))
    return compute_infonce_batch(anchors, latents, temperature, denominator_mode).item()


def attack_dataset(
    bundle: ModelBundle,
    images: np.ndarray,
    labels: np.ndarray,
    cfg: AttackConfig,
    seed: int = 0,
    batch_size: int = 128,
) -> AdversarialPair:
    """
    Supervised PGD over a whole image array in batches.

    Batch b uses the attack seed ``derive_seed(seed, 4, b)``, so results depend
    only on the seed and the batch size.
    """
    pairs = []
    for batch, start in enumerate(range(0, images.shape[0], batch_size)):
        stop = start + batch_size
        batch_seed = derive_seed(seed, ADVERSARIAL_STREAM, batch)
        pairs.append(pgd(bundle, images[start:stop], labels[start:stop], cfg, seed=batch_seed))
    return AdversarialPair(
        clean=np.concatenate([p.clean for p in pairs]),
        adversarial=np.concatenate([p.adversarial for p in pairs]),
        loss_before=np.concatenate([p.loss_before for p in pairs]),
        loss_after=np.concatenate([p.loss_after for p in pairs]),
    )


def summarize_attack(
    pair: AdversarialPair, cfg: AttackConfig, checkpoint: str, labels: np.ndarray, paths: Sequence[str] = ()
) -> AttackSummary:
    """Per-image loss change plus an audit of the ball and [0, 1] constraints."""
    tolerance = 1e-6
    distances = pair.linf_distance
    lows = pair.adversarial.reshape(len(distances), -1).min(axis=1)
    highs = pair.adversarial.reshape(len(distances), -1).max(axis=1)
    images = []
    for i, distance in enumerate(distances):
        images.append(AttackImageSummary(
            index=i,
            path=paths[i] if i < len(paths) else "",
            label=int(labels[i]),
            loss_before=float(pair.loss_before[i]),
            loss_after=float(pair.loss_after[i]),
            loss_delta=float(pair.loss_after[i] - pair.loss_before[i]),
            linf_distance=float(distance),
            within_ball=bool(distance <= cfg.epsilon + tolerance),
            in_range=bool(lows[i] >= 0.0 and highs[i] <= 1.0),
        ))
    violations = sum(1 for item in images if not (item.within_ball and item.in_range))
    if violations:
        logger.warning(f"{violations} adversarial images violate the ball or range constraint")
    return AttackSummary(
        config=cfg,
        checkpoint=checkpoint,
        images=images,
        violations=violations,
        mean_loss_delta=float(np.mean([item.loss_delta for item in images])) if images else 0.0,
    )
