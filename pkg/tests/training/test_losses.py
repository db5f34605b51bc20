"""
Tests for the batch InfoNCE loss.
"""

import numpy as np
import pytest

from robustlab.core.exceptions import ConfigurationError, DegenerateInputError, DimensionError, NoNegativesError
from robustlab.engine.tensor import Tape, Tensor, backward
from robustlab.models.training import DenominatorMode
from robustlab.services.losses import compute_infonce_batch, infonce_losses


def brute_force_infonce(clean, adversarial, temperature, as_written=False):
    """Direct per-anchor evaluation from the full similarity matrix, in float64."""
    def cos(u, v):
        return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))

    count = clean.shape[0]
    losses = []
    for i in range(count):
        positive = np.exp(cos(clean[i], adversarial[i]) / temperature)
        negatives = sum(
            np.exp(cos(clean[i], adversarial[k]) / temperature) + np.exp(cos(clean[i], clean[k]) / temperature)
            for k in range(count)
            if k != i
        )
        denominator = negatives if as_written else negatives + positive
        losses.append(-np.log(positive / denominator))
    return np.mean(losses)


def test_identical_latents_give_log_three():
    latents = Tensor(np.ones((2, 4)))
    loss = compute_infonce_batch(latents, Tensor(np.ones((2, 4))), temperature=0.5)
    assert loss.item() == pytest.approx(np.log(3.0))


def test_identical_latents_as_written_give_log_two():
    latents = Tensor(np.ones((2, 4)))
    loss = compute_infonce_batch(latents, Tensor(np.ones((2, 4))), 0.5, DenominatorMode.AS_WRITTEN)
    assert loss.item() == pytest.approx(np.log(2.0))


@pytest.mark.parametrize("mode", list(DenominatorMode), ids=lambda m: m.value)
@pytest.mark.parametrize("count", [2, 4, 8])
def test_matches_brute_force(mode, count):
    rng = np.random.default_rng(100 + count)
    for _ in range(100):
        clean, adversarial = rng.normal(size=(count, 6)), rng.normal(size=(count, 6))
        temperature = float(rng.uniform(0.1, 1.0))
        loss = compute_infonce_batch(Tensor(clean), Tensor(adversarial), temperature, mode)
        expected = brute_force_infonce(clean, adversarial, temperature, as_written=mode is DenominatorMode.AS_WRITTEN)
        assert loss.item() == pytest.approx(expected, abs=1e-5)


def test_positive_scaling_leaves_loss_unchanged():
    rng = np.random.default_rng(2)
    clean, adversarial = rng.normal(size=(3, 5)), rng.normal(size=(3, 5))
    base = compute_infonce_batch(Tensor(clean), Tensor(adversarial), 0.5).item()
    scaled = compute_infonce_batch(Tensor(7.5 * clean), Tensor(7.5 * adversarial), 0.5).item()
    assert scaled == pytest.approx(base, rel=1e-9)


def test_per_anchor_losses_have_batch_length():
    rng = np.random.default_rng(3)
    losses = infonce_losses(Tensor(rng.normal(size=(5, 3))), Tensor(rng.normal(size=(5, 3))), 0.5)
    assert losses.shape == (5,)
    assert np.all(losses.data > 0)


def test_gradient_reaches_both_batches():
    rng = np.random.default_rng(4)
    clean = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    adversarial = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    with Tape() as tape:
        loss = compute_infonce_batch(clean, adversarial, 0.5)
    backward(tape, loss)
    assert np.any(clean.grad != 0)
    assert np.any(adversarial.grad != 0)


def test_single_instance_has_no_negatives():
    with pytest.raises(NoNegativesError):
        compute_infonce_batch(Tensor(np.ones((1, 3))), Tensor(np.ones((1, 3))), 0.5)


def test_zero_latent_is_degenerate():
    clean = np.ones((2, 3))
    clean[1] = 0.0
    with pytest.raises(DegenerateInputError):
        compute_infonce_batch(Tensor(clean), Tensor(np.ones((2, 3))), 0.5)


def test_temperature_must_be_positive():
    with pytest.raises(ConfigurationError):
        compute_infonce_batch(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))), 0.0)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        compute_infonce_batch(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 3))), 0.5)
