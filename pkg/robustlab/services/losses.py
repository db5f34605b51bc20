"""Batch InfoNCE over clean and adversarial latents."""

import logging

import numpy as np

from robustlab.core.exceptions import ConfigurationError, DimensionError, NoNegativesError
from robustlab.engine import ops
from robustlab.engine.tensor import Tensor, as_tensor
from robustlab.models.training import DenominatorMode

logger = logging.getLogger(__name__)


def infonce_losses(
    latents_clean: Tensor,
    latents_adv: Tensor,
    temperature: float,
    denominator_mode: DenominatorMode = DenominatorMode.STANDARD,
) -> Tensor:
    """
    Per-anchor InfoNCE loss, shape (M,).

    Anchor i is the clean latent z_i and its positive is the adversarial latent
    ẑ_i. The negatives are every other instance's latent from both batches
    (z_k and ẑ_k for k != i). In ``standard`` mode the positive also sits in
    the denominator; in ``as-written`` mode it does not.

    Raises:
        NoNegativesError: fewer than two instances
        DegenerateInputError: a zero latent vector
    """
    latents_clean, latents_adv = as_tensor(latents_clean), as_tensor(latents_adv)
    if latents_clean.shape != latents_adv.shape or latents_clean.data.ndim != 2:
        raise DimensionError(
            "InfoNCE needs two (M, D) latent batches of equal shape",
            expected=latents_clean.shape,
            actual=latents_adv.shape,
        )
    count = latents_clean.shape[0]
    if count < 2:
        raise NoNegativesError(f"InfoNCE needs at least 2 instances for negatives, got {count}")
    if temperature <= 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")

    z = ops.l2_normalize(latents_clean)
    z_hat = ops.l2_normalize(latents_adv)
    to_positive = ops.scale(ops.matmul(z, ops.transpose(z_hat)), 1.0 / temperature)
    to_clean = ops.scale(ops.matmul(z, ops.transpose(z)), 1.0 / temperature)
    logits = ops.concat([to_positive, to_clean], axis=1)

    eye = np.eye(count, dtype=bool)
    mask = np.concatenate([np.ones((count, count), dtype=bool), ~eye], axis=1)
    if DenominatorMode(denominator_mode) is DenominatorMode.AS_WRITTEN:
        mask[:, :count] &= ~eye

    log_denominator = ops.logsumexp(logits, mask=mask)
    return ops.sub(log_denominator, ops.diagonal(to_positive))


def compute_infonce_batch(
    latents_clean: Tensor,
    latents_adv: Tensor,
    temperature: float,
    denominator_mode: DenominatorMode = DenominatorMode.STANDARD,
) -> Tensor:
    """Mean InfoNCE over the M anchors, as a scalar tensor."""
    return ops.tensor_mean(infonce_losses(latents_clean, latents_adv, temperature, denominator_mode))
