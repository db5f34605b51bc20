"""
Gradient checks for the differentiable operations.

Analytic gradients from the tape are compared with central finite differences
in float64, each over twenty random draws.
"""

import numpy as np
import pytest

from robustlab.core.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DimensionError,
    LabelIndexError,
)
from robustlab.engine import ops
from robustlab.engine.tensor import LayerParams, Tape, Tensor, backward

STEP = 1e-6


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.tensor_sum(ops.mul(out, Tensor(weights, dtype=np.float64)))


def gradcheck(fn, arrays, atol=1e-5, rtol=1e-3):
    """Assert that the tape gradient of ``fn(*tensors)`` matches finite differences."""
    tensors = [Tensor(a.astype(np.float64), requires_grad=True) for a in arrays]
    with Tape() as tape:
        loss = fn(*tensors)
    backward(tape, loss)

    for index, array in enumerate(arrays):
        analytic = tensors[index].grad
        numeric = np.zeros_like(array, dtype=np.float64)
        for position in np.ndindex(array.shape):
            values = []
            for sign in (1.0, -1.0):
                shifted = [a.astype(np.float64).copy() for a in arrays]
                shifted[index][position] += sign * STEP
                values.append(fn(*[Tensor(p) for p in shifted]).item())
            numeric[position] = (values[0] - values[1]) / (2 * STEP)
        close = np.abs(analytic - numeric) <= atol
        relative = np.abs(analytic - numeric) <= rtol * np.maximum(np.abs(numeric), 1e-12)
        assert np.all(close | relative), f"input {index}: analytic {analytic} vs numeric {numeric}"


@pytest.fixture(params=range(20), ids=lambda seed: f"seed{seed}")
def rng(request):
    return np.random.default_rng(request.param)


def test_dense_vector_gradients(rng):
    w, b, x = rng.normal(size=(3, 4)), rng.normal(size=3), rng.normal(size=4)
    weights = rng.normal(size=3)
    gradcheck(lambda w, b, x: _weighted_sum(ops.dense_forward(LayerParams(w, b), x), weights), [w, b, x])


def test_dense_batch_gradients(rng):
    w, b, x = rng.normal(size=(2, 5)), rng.normal(size=2), rng.normal(size=(3, 5))
    weights = rng.normal(size=(3, 2))
    gradcheck(lambda w, b, x: _weighted_sum(ops.dense_forward(LayerParams(w, b), x), weights), [w, b, x])


def test_dense_rejects_wrong_input_length():
    params = LayerParams(Tensor(np.zeros((3, 4))), Tensor(np.zeros(3)))
    with pytest.raises(DimensionError):
        ops.dense_forward(params, Tensor(np.zeros(5)))


@pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1)])
def test_conv2d_gradients(rng, stride, padding):
    kernel, bias = rng.normal(size=(3, 3, 2, 3)), rng.normal(size=3)
    x = rng.normal(size=(2, 5, 5, 2))
    out_size = ops.conv2d_output_size(5, 3, stride, padding)
    weights = rng.normal(size=(2, out_size, out_size, 3))
    gradcheck(
        lambda k, b, x: _weighted_sum(ops.conv2d_forward(LayerParams(k, b), x, stride, padding), weights),
        [kernel, bias, x],
    )


def test_conv2d_output_shape():
    params = LayerParams(Tensor(np.zeros((3, 3, 3, 4))), Tensor(np.zeros(4)))
    out = ops.conv2d_forward(params, Tensor(np.zeros((2, 8, 8, 3))), stride=2, padding=1)
    assert out.shape == (2, 4, 4, 4)

    single = ops.conv2d_forward(params, Tensor(np.zeros((8, 8, 3))), stride=1, padding=1)
    assert single.shape == (8, 8, 4)


def test_conv2d_matches_direct_sum(rng):
    kernel, bias = rng.normal(size=(2, 2, 1, 1)), rng.normal(size=1)
    x = rng.normal(size=(1, 3, 3, 1))
    out = ops.conv2d_forward(LayerParams(Tensor(kernel), Tensor(bias)), Tensor(x))
    expected = np.sum(x[0, 0:2, 1:3, 0] * kernel[:, :, 0, 0]) + bias[0]
    assert out.data[0, 0, 1, 0] == pytest.approx(expected)


def test_conv2d_configuration_errors():
    params = LayerParams(Tensor(np.zeros((3, 3, 3, 2))), Tensor(np.zeros(2)))
    x = Tensor(np.zeros((1, 4, 4, 3)))
    with pytest.raises(ConfigurationError):
        ops.conv2d_forward(params, x, stride=0)
    with pytest.raises(ConfigurationError):
        ops.conv2d_forward(params, x, padding=-1)
    big = LayerParams(Tensor(np.zeros((5, 5, 3, 2))), Tensor(np.zeros(2)))
    with pytest.raises(ConfigurationError):
        ops.conv2d_forward(big, Tensor(np.zeros((1, 3, 3, 3))))


def test_relu_gradients_away_from_zero(rng):
    x = rng.normal(size=(4, 3))
    x[np.abs(x) < 0.1] = 0.5
    weights = rng.normal(size=(4, 3))
    gradcheck(lambda x: _weighted_sum(ops.relu_forward(x), weights), [x])


def test_relu_subgradient_at_zero_is_zero():
    x = Tensor(np.array([0.0, 1.0, -1.0]), requires_grad=True)
    with Tape() as tape:
        loss = ops.tensor_sum(ops.relu_forward(x))
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])


def test_global_avg_pool_gradients(rng):
    x = rng.normal(size=(2, 3, 3, 2))
    weights = rng.normal(size=(2, 2))
    gradcheck(lambda x: _weighted_sum(ops.global_avg_pool(x), weights), [x])


@pytest.mark.parametrize("reduction", ["mean", "sum"])
def test_cross_entropy_batch_gradients(rng, reduction):
    logits = rng.normal(size=(4, 3))
    labels = np.array([0, 2, 1, 2])
    gradcheck(lambda z: ops.softmax_cross_entropy(z, labels, reduction), [logits])


def test_cross_entropy_single_vector(rng):
    logits = rng.normal(size=5)
    gradcheck(lambda z: ops.softmax_cross_entropy(z, 3), [logits])


def test_cross_entropy_uniform_logits_is_log_k():
    loss = ops.softmax_cross_entropy(Tensor(np.zeros(4)), 1)
    assert loss.item() == pytest.approx(np.log(4.0))


def test_cross_entropy_is_stable_for_large_logits():
    loss = ops.softmax_cross_entropy(Tensor(np.array([1000.0, 0.0])), 0)
    assert np.isfinite(loss.item())
    assert loss.item() == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(LabelIndexError):
        ops.softmax_cross_entropy(Tensor(np.zeros(3)), 3)
    with pytest.raises(LabelIndexError):
        ops.softmax_cross_entropy(Tensor(np.zeros((2, 3))), [0, -1])


def test_cosine_similarity_gradients(rng):
    u, v = rng.normal(size=5), rng.normal(size=5)
    gradcheck(lambda u, v: ops.cosine_similarity(u, v), [u, v])


def test_cosine_similarity_values():
    u = Tensor(np.array([1.0, 0.0]))
    assert ops.cosine_similarity(u, Tensor(np.array([2.0, 0.0]))).item() == pytest.approx(1.0)
    assert ops.cosine_similarity(u, Tensor(np.array([0.0, 3.0]))).item() == pytest.approx(0.0)
    assert ops.cosine_similarity(u, Tensor(np.array([-1.0, 0.0]))).item() == pytest.approx(-1.0)


def test_cosine_similarity_zero_vector():
    with pytest.raises(DegenerateInputError):
        ops.cosine_similarity(Tensor(np.zeros(3)), Tensor(np.ones(3)))


def test_l2_normalize_gradients(rng):
    x = rng.normal(size=(3, 4))
    weights = rng.normal(size=(3, 4))
    gradcheck(lambda x: _weighted_sum(ops.l2_normalize(x), weights), [x])


def test_l2_normalize_rows_have_unit_norm(rng):
    out = ops.l2_normalize(Tensor(rng.normal(size=(5, 3))))
    np.testing.assert_allclose(np.linalg.norm(out.data, axis=1), 1.0, rtol=1e-6)


def test_logsumexp_masked_gradients(rng):
    x = rng.normal(size=(3, 4))
    mask = np.ones((3, 4), dtype=bool)
    mask[0, 1] = mask[2, 3] = False
    weights = rng.normal(size=3)
    gradcheck(lambda x: _weighted_sum(ops.logsumexp(x, mask), weights), [x])


def test_logsumexp_excludes_masked_entries():
    x = Tensor(np.array([[0.0, 100.0]]))
    out = ops.logsumexp(x, np.array([[True, False]]))
    assert out.data[0] == pytest.approx(0.0)


def test_logsumexp_rejects_empty_row():
    with pytest.raises(DimensionError):
        ops.logsumexp(Tensor(np.zeros((2, 2))), np.array([[True, True], [False, False]]))


def test_matmul_transpose_and_diagonal_gradients(rng):
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    weights = rng.normal(size=3)
    gradcheck(lambda a, b: _weighted_sum(ops.diagonal(ops.matmul(a, ops.transpose(b))), weights), [a, b])


def test_concat_and_take_rows_gradients(rng):
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(1, 3))
    weights = rng.normal(size=(2, 3))

    def fn(a, b):
        joined = ops.concat([a, b], axis=0)
        return _weighted_sum(ops.take_rows(joined, 1, 3), weights)

    gradcheck(fn, [a, b])


def test_elementwise_ops_gradients(rng):
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
    gradcheck(lambda a, b: ops.tensor_mean(ops.mul(ops.sub(a, ops.scale(b, 2.0)), ops.add(a, b))), [a, b])


def test_shape_mismatch_raises_dimension_error():
    with pytest.raises(DimensionError):
        ops.add(Tensor(np.zeros(2)), Tensor(np.zeros(3)))
    with pytest.raises(DimensionError):
        ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
    with pytest.raises(DimensionError):
        ops.reshape(Tensor(np.zeros(6)), (4, 2))


def _gradients(fn, arrays):
    tensors = [Tensor(a.astype(np.float64), requires_grad=True) for a in arrays]
    with Tape() as tape:
        loss = fn(*tensors)
    backward(tape, loss)
    return loss.item(), [t.grad for t in tensors]


def _mlp_loss(w, b, x, labels):
    hidden = ops.relu_forward(ops.dense_forward(LayerParams(w, b), x))
    return ops.softmax_cross_entropy(hidden, labels)


def test_backward_is_linear_in_the_loss(rng):
    w, b, x = rng.normal(size=(3, 4)), rng.normal(size=3), rng.normal(size=(5, 4))
    labels = rng.integers(0, 3, size=5)
    weights = rng.normal(size=(5, 3))
    a, c = rng.normal(), rng.normal()

    def f(w, b, x):
        return _mlp_loss(w, b, x, labels)

    def g(w, b, x):
        return _weighted_sum(ops.dense_forward(LayerParams(w, b), x), weights)

    def combined(w, b, x):
        return ops.add(ops.scale(f(w, b, x), a), ops.scale(g(w, b, x), c))

    _, grads_f = _gradients(f, [w, b, x])
    _, grads_g = _gradients(g, [w, b, x])
    _, grads_combined = _gradients(combined, [w, b, x])
    for gf, gg, gc in zip(grads_f, grads_g, grads_combined):
        np.testing.assert_allclose(gc, a * gf + c * gg, rtol=1e-10, atol=1e-12)


def test_forward_and_backward_are_bit_reproducible(rng):
    kernel, bias = rng.normal(size=(3, 3, 3, 4)), rng.normal(size=4)
    w, b = rng.normal(size=(2, 4)), rng.normal(size=2)
    x = rng.random((3, 6, 6, 3))
    labels = np.array([0, 1, 1])

    def fn(kernel, bias, w, b, x):
        features = ops.global_avg_pool(ops.relu_forward(ops.conv2d_forward(LayerParams(kernel, bias), x, 1, 1)))
        return ops.softmax_cross_entropy(ops.dense_forward(LayerParams(w, b), features), labels)

    for dtype in (np.float32, np.float64):
        arrays = [a.astype(dtype) for a in (kernel, bias, w, b, x)]
        runs = []
        for _ in range(2):
            tensors = [Tensor(a, requires_grad=True) for a in arrays]
            with Tape() as tape:
                loss = fn(*tensors)
            backward(tape, loss)
            runs.append((loss.data.copy(), [t.grad.copy() for t in tensors]))
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        for first, second in zip(runs[0][1], runs[1][1]):
            assert first.dtype == dtype
            np.testing.assert_array_equal(first, second)


def test_gradient_of_sum_is_ones(rng):
    x = rng.normal(size=(3, 4, 2))
    _, (grad,) = _gradients(ops.tensor_sum, [x])
    np.testing.assert_array_equal(grad, np.ones_like(x))


def test_gradient_of_zero_times_loss_is_zero(rng):
    w, b, x = rng.normal(size=(3, 4)), rng.normal(size=3), rng.normal(size=(2, 4))
    labels = np.array([2, 0])
    value, grads = _gradients(lambda w, b, x: ops.scale(_mlp_loss(w, b, x, labels), 0.0), [w, b, x])
    assert value == 0.0
    for grad, array in zip(grads, (w, b, x)):
        np.testing.assert_array_equal(grad, np.zeros_like(array))


@pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 0), (2, 1)])
def test_conv2d_matches_nested_loops(rng, stride, padding):
    x = rng.normal(size=(5, 5, 2))
    kernel, bias = rng.normal(size=(3, 3, 2, 3)), rng.normal(size=3)
    out = ops.conv2d_forward(LayerParams(Tensor(kernel), Tensor(bias)), Tensor(x), stride, padding).data

    padded = np.pad(x, ((padding, padding), (padding, padding), (0, 0)))
    size = ops.conv2d_output_size(5, 3, stride, padding)
    expected = np.zeros((size, size, 3))
    for r in range(size):
        for c in range(size):
            for o in range(3):
                total = bias[o]
                for i in range(3):
                    for j in range(3):
                        for k in range(2):
                            total += padded[r * stride + i, c * stride + j, k] * kernel[i, j, k, o]
                expected[r, c, o] = total
    np.testing.assert_allclose(out, expected, rtol=1e-10, atol=1e-12)


def test_dense_matches_nested_loops(rng):
    w, b, x = rng.normal(size=(4, 3)), rng.normal(size=4), rng.normal(size=3)
    out = ops.dense_forward(LayerParams(Tensor(w), Tensor(b)), Tensor(x)).data
    expected = np.array([b[i] + sum(w[i, j] * x[j] for j in range(3)) for i in range(4)])
    np.testing.assert_allclose(out, expected, rtol=1e-10, atol=1e-12)
