"""
Tests for parameter sets and the momentum SGD step.
"""

import numpy as np
import pytest

from robustlab.core.exceptions import ConfigurationError, DimensionError
from robustlab.engine.optim import ParameterSet, sgd_step
from robustlab.engine.tensor import Tensor


@pytest.fixture
def params():
    p = ParameterSet()
    p.add_layer("fc", Tensor(np.array([[1.0, 2.0]])), Tensor(np.array([0.5])))
    return p


def test_add_layer_names_and_tracks(params):
    names = [name for name, _ in params.named_tensors()]
    assert names == ["fc.weight", "fc.bias"]
    assert all(t.requires_grad for _, t in params.named_tensors())
    assert params.parameter_count() == 3


def test_zero_learning_rate_leaves_parameters_unchanged(params):
    before = params.copy()
    grads = {"fc.weight": np.array([[3.0, -1.0]], dtype=np.float32), "fc.bias": np.array([2.0], dtype=np.float32)}
    sgd_step(params, grads, lr=0.0, momentum=0.9)
    for (_, a), (_, b) in zip(params.named_tensors(), before.named_tensors()):
        np.testing.assert_array_equal(a.data, b.data)


def test_plain_sgd_step(params):
    grads = {"fc.weight": np.array([[1.0, 1.0]], dtype=np.float32), "fc.bias": np.array([-2.0], dtype=np.float32)}
    sgd_step(params, grads, lr=0.5)
    np.testing.assert_allclose(params["fc"].weight.data, [[0.5, 1.5]])
    np.testing.assert_allclose(params["fc"].bias.data, [1.5])


def test_momentum_accumulates_velocity(params):
    grads = {"fc.weight": np.array([[1.0, 0.0]], dtype=np.float32), "fc.bias": np.array([0.0], dtype=np.float32)}
    sgd_step(params, grads, lr=0.1, momentum=0.9)
    sgd_step(params, grads, lr=0.1, momentum=0.9)
    # v1 = 1, v2 = 0.9 + 1 = 1.9; total step 0.1 * 2.9
    np.testing.assert_allclose(params["fc"].weight.data[0, 0], 1.0 - 0.29, rtol=1e-6)
    np.testing.assert_allclose(params.velocity["fc.weight"], [[1.9, 0.0]], rtol=1e-6)


def test_step_uses_tensor_grads_by_default(params):
    params["fc"].weight.grad = np.array([[2.0, 2.0]], dtype=np.float32)
    sgd_step(params, lr=1.0)
    np.testing.assert_allclose(params["fc"].weight.data, [[-1.0, 0.0]])
    # no bias gradient means a zero step
    np.testing.assert_allclose(params["fc"].bias.data, [0.5])


@pytest.mark.parametrize("lr,momentum", [(-0.1, 0.0), (0.1, 1.0), (0.1, -0.5)])
def test_invalid_hyperparameters(params, lr, momentum):
    with pytest.raises(ConfigurationError):
        sgd_step(params, {}, lr=lr, momentum=momentum)


def test_gradient_shape_mismatch(params):
    with pytest.raises(DimensionError):
        sgd_step(params, {"fc.weight": np.zeros((2, 2), dtype=np.float32)}, lr=0.1)


def test_copy_and_state_equal(params):
    clone = params.copy()
    assert clone.state_equal(params)
    sgd_step(clone, {"fc.bias": np.array([1.0], dtype=np.float32)}, lr=0.1)
    assert not clone.state_equal(params)


def test_detached_view_shares_data(params):
    view = params.detached()
    assert view["fc"].weight.data is params["fc"].weight.data
    assert not view["fc"].weight.requires_grad
