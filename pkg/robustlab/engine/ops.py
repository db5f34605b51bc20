"""
Differentiable operations.

Every op computes its forward value with numpy, then registers a closure that
maps the gradient of its output to gradients of its inputs. Images use NHWC
layout (batch, height, width, channels); dense weights are stored (out, in).
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from robustlab.core.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DimensionError,
    LabelIndexError,
)
from robustlab.engine.tensor import LayerParams, Tensor, as_tensor, record

logger = logging.getLogger(__name__)

# reductions longer than this accumulate in float64
WIDE_REDUCTION = 4096


def _wide_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b, accumulating in float64 when the contraction is long."""
    if a.shape[-1] > WIDE_REDUCTION:
        return (a.astype(np.float64) @ b.astype(np.float64)).astype(np.result_type(a, b))
    return a @ b


def _wide_sum(a: np.ndarray, axis=None) -> np.ndarray:
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    if count > WIDE_REDUCTION:
        return np.sum(a, axis=axis, dtype=np.float64).astype(a.dtype)
    return np.sum(a, axis=axis)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

def dense_forward(params: LayerParams, x: Tensor) -> Tensor:
    """
    y = W x + b for a vector, or row-wise for a batch of shape (B, in).

    Args:
        params: weight of shape (out, in) and bias of shape (out,)
        x: input of shape (in,) or (B, in)

    Returns:
        Tensor of shape (out,) or (B, out)
    """
    weight, bias = params
    x = as_tensor(x)
    if weight.data.ndim != 2 or x.data.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
        raise DimensionError(f"dense layer cannot take input {x.shape} with weight {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"dense bias {bias.shape} does not match weight {weight.shape}")

    vector = x.data.ndim == 1
    xb = x.data[None, :] if vector else x.data
    out = _wide_matmul(xb, weight.data.T) + bias.data
    if vector:
        out = out[0]

    def backward(grad: np.ndarray):
        g = grad[None, :] if vector else grad
        dx = (g @ weight.data).reshape(x.shape) if x.requires_grad else None
        dw = _wide_matmul(g.T, xb) if weight.requires_grad else None
        db = _wide_sum(g, axis=0) if bias.requires_grad else None
        return dx, dw, db

    return record("dense", (x, weight, bias), out, backward)


def conv2d_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def conv2d_forward(params: LayerParams, x: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """
    Cross-correlation of an NHWC batch (or a single HWC image) with a kernel.

    Args:
        params: kernel of shape (kh, kw, C_in, C_out) and bias of shape (C_out,)
        x: input of shape (B, H, W, C_in) or (H, W, C_in)
        stride: step between receptive fields, >= 1
        padding: zero padding added on every spatial border

    Returns:
        Tensor of shape (B, H_out, W_out, C_out), H_out = floor((H + 2p - kh)/s) + 1
    """
    kernel, bias = params
    x = as_tensor(x)
    if stride < 1:
        raise ConfigurationError(f"conv2d stride must be >= 1, got {stride}")
    if padding < 0:
        raise ConfigurationError(f"conv2d padding must be >= 0, got {padding}")
    if kernel.data.ndim != 4:
        raise DimensionError(f"conv2d kernel must be (kh, kw, C_in, C_out), got {kernel.shape}")

    single = x.data.ndim == 3
    xb = x.data[None] if single else x.data
    if xb.ndim != 4 or xb.shape[3] != kernel.shape[2]:
        raise DimensionError(f"conv2d cannot take input {x.shape} with kernel {kernel.shape}")

    kh, kw, c_in, c_out = kernel.shape
    batch, height, width, _ = xb.shape
    if kh > height + 2 * padding or kw > width + 2 * padding:
        raise ConfigurationError(
            f"conv2d kernel {kh}x{kw} larger than padded input {height + 2 * padding}x{width + 2 * padding}"
        )

    out_h = conv2d_output_size(height, kh, stride, padding)
    out_w = conv2d_output_size(width, kw, stride, padding)
    padded = np.pad(xb, ((0, 0), (padding, padding), (padding, padding), (0, 0))) if padding else xb

    patches = []
    for i in range(kh):
        for j in range(kw):
            patches.append(
                padded[:, i:i + stride * (out_h - 1) + 1:stride, j:j + stride * (out_w - 1) + 1:stride, :]
            )
    # (B, H_out, W_out, kh*kw, C_in) -> rows of length kh*kw*C_in
    cols = np.stack(patches, axis=3).reshape(batch * out_h * out_w, kh * kw * c_in)
    kernel_matrix = kernel.data.reshape(kh * kw * c_in, c_out)
    out = (cols @ kernel_matrix + bias.data).reshape(batch, out_h, out_w, c_out)
    if single:
        out = out[0]

    def backward(grad: np.ndarray):
        g = grad.reshape(batch * out_h * out_w, c_out)
        dk = _wide_matmul(cols.T, g).reshape(kernel.shape) if kernel.requires_grad else None
        db = _wide_sum(g, axis=0) if bias.requires_grad else None
        dx = None
        if x.requires_grad:
            dcols = (g @ kernel_matrix.T).reshape(batch, out_h, out_w, kh * kw, c_in)
            dpadded = np.zeros_like(padded)
            for i in range(kh):
                for j in range(kw):
                    dpadded[:, i:i + stride * (out_h - 1) + 1:stride, j:j + stride * (out_w - 1) + 1:stride, :] += (
                        dcols[:, :, :, i * kw + j, :]
                    )
            dx = dpadded[:, padding:padding + height, padding:padding + width, :]
            if single:
                dx = dx[0]
        return dx, dk, db

    return record("conv2d", (x, kernel, bias), out, backward)


def relu_forward(x: Tensor) -> Tensor:
    """max(0, x); the subgradient at exactly 0 is 0."""
    x = as_tensor(x)
    mask = x.data > 0
    out = np.where(mask, x.data, np.zeros((), dtype=x.dtype))

    def backward(grad: np.ndarray):
        return (grad * mask,)

    return record("relu", (x,), out, backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the spatial axes of an NHWC batch: (B, H, W, C) -> (B, C)."""
    x = as_tensor(x)
    if x.data.ndim != 4:
        raise DimensionError(f"global_avg_pool needs (B, H, W, C), got {x.shape}")
    _, height, width, _ = x.shape
    count = height * width
    out = _wide_sum(x.data, axis=(1, 2)) / np.asarray(count, dtype=x.dtype)

    def backward(grad: np.ndarray):
        return (np.broadcast_to(grad[:, None, None, :] / np.asarray(count, dtype=grad.dtype), x.shape).copy(),)

    return record("global_avg_pool", (x,), out.astype(x.dtype), backward)


# ---------------------------------------------------------------------------
# Losses and similarities
# ---------------------------------------------------------------------------

def softmax_cross_entropy(
    logits: Tensor,
    labels: Union[int, Sequence[int], np.ndarray],
    reduction: str = "mean",
) -> Tensor:
    """
    -log softmax(logits)[label], stabilized with max subtraction.

    Args:
        logits: shape (K,) with an int label, or (B, K) with B labels
        labels: class index or indices
        reduction: "mean", "sum" or "none" over the batch

    Returns:
        Scalar tensor (or (B,) for reduction="none")
    """
    logits = as_tensor(logits)
    single = logits.data.ndim == 1
    z = logits.data[None, :] if single else logits.data
    if z.ndim != 2:
        raise DimensionError(f"cross entropy needs logits of shape (K,) or (B, K), got {logits.shape}")
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if y.shape != (z.shape[0],):
        raise DimensionError("cross entropy labels do not match batch", expected=(z.shape[0],), actual=y.shape)
    num_classes = z.shape[1]
    if np.any(y < 0) or np.any(y >= num_classes):
        raise LabelIndexError(f"label out of range for {num_classes} classes: {y[(y < 0) | (y >= num_classes)].tolist()}")
    if reduction not in ("mean", "sum", "none"):
        raise ConfigurationError(f"Unknown reduction: {reduction}")

    rows = np.arange(z.shape[0])
    shifted = z - z.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    losses = np.log(total[:, 0]) - shifted[rows, y]
    softmax = exp / total

    batch = z.shape[0]
    if reduction == "mean":
        out = np.asarray(_wide_sum(losses) / batch, dtype=z.dtype)
    elif reduction == "sum":
        out = np.asarray(_wide_sum(losses), dtype=z.dtype)
    else:
        out = losses.astype(z.dtype)

    def backward(grad: np.ndarray):
        d = softmax.copy()
        d[rows, y] -= 1
        if reduction == "mean":
            d *= grad / batch
        elif reduction == "sum":
            d *= grad
        else:
            d *= grad[:, None]
        return (d[0] if single else d,)

    return record("softmax_cross_entropy", (logits,), out, backward)


def cosine_similarity(u: Tensor, v: Tensor) -> Tensor:
    """
    uᵀv / (‖u‖ ‖v‖) for two vectors of equal length, clipped into [-1, 1].

    Raises:
        DegenerateInputError: if either vector is all zeros
    """
    u, v = as_tensor(u), as_tensor(v)
    if u.shape != v.shape or u.data.ndim != 1:
        raise DimensionError("cosine similarity needs two equal-length vectors", expected=u.shape, actual=v.shape)
    uu = u.data.astype(np.float64)
    vv = v.data.astype(np.float64)
    nu, nv = np.linalg.norm(uu), np.linalg.norm(vv)
    if nu == 0 or nv == 0:
        raise DegenerateInputError("cosine similarity is undefined for a zero vector")
    sim = float(np.clip(uu @ vv / (nu * nv), -1.0, 1.0))
    dtype = np.result_type(u.dtype, v.dtype)

    def backward(grad: np.ndarray):
        g = float(grad)
        du = (vv / (nu * nv) - sim * uu / nu ** 2) * g if u.requires_grad else None
        dv = (uu / (nu * nv) - sim * vv / nv ** 2) * g if v.requires_grad else None
        return (
            None if du is None else du.astype(u.dtype),
            None if dv is None else dv.astype(v.dtype),
        )

    return record("cosine_similarity", (u, v), np.asarray(sim, dtype=dtype), backward)


def l2_normalize(x: Tensor) -> Tensor:
    """Scale every row (last axis) to unit L2 norm."""
    x = as_tensor(x)
    norms = np.sqrt(np.sum(x.data.astype(np.float64) ** 2, axis=-1, keepdims=True))
    if np.any(norms == 0):
        raise DegenerateInputError("cannot normalize a zero vector")
    norms = norms.astype(x.dtype)
    out = x.data / norms

    def backward(grad: np.ndarray):
        dot = np.sum(grad * out, axis=-1, keepdims=True)
        return ((grad - out * dot) / norms,)

    return record("l2_normalize", (x,), out, backward)


def logsumexp(x: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Row-wise log Σ exp over the last axis of a 2-D tensor.

    Args:
        x: shape (R, C)
        mask: optional boolean (R, C); False entries are excluded from the sum

    Returns:
        Tensor of shape (R,)
    """
    x = as_tensor(x)
    if mask is None:
        mask = np.ones(x.shape, dtype=bool)
    if mask.shape != x.shape:
        raise DimensionError("logsumexp mask must match input", expected=x.shape, actual=mask.shape)
    if not np.all(mask.any(axis=-1)):
        raise DimensionError("logsumexp mask leaves an empty row")
    masked = np.where(mask, x.data, -np.inf)
    top = masked.max(axis=-1, keepdims=True)
    exp = np.where(mask, np.exp(masked - top), 0).astype(x.dtype)
    total = exp.sum(axis=-1, keepdims=True)
    out = (top + np.log(total))[:, 0].astype(x.dtype)

    def backward(grad: np.ndarray):
        return (grad[:, None] * exp / total,)

    return record("logsumexp", (x,), out, backward)


# ---------------------------------------------------------------------------
# Generic tensor algebra
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shapes {a.shape} and {b.shape} are incompatible")
    out = _wide_matmul(a.data, b.data)

    def backward(grad: np.ndarray):
        da = _wide_matmul(grad, b.data.T) if a.requires_grad else None
        db = _wide_matmul(a.data.T, grad) if b.requires_grad else None
        return da, db

    return record("matmul", (a, b), out, backward)


def transpose(x: Tensor) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim != 2:
        raise DimensionError(f"transpose needs a 2-D tensor, got {x.shape}")

    def backward(grad: np.ndarray):
        return (grad.T,)

    return record("transpose", (x,), np.ascontiguousarray(x.data.T), backward)


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"cannot reshape {x.shape} to {shape}") from e

    def backward(grad: np.ndarray):
        return (grad.reshape(x.shape),)

    return record("reshape", (x,), out, backward)


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a constant."""
    x = as_tensor(x)
    factor_arr = np.asarray(factor, dtype=x.dtype)
    out = x.data * factor_arr

    def backward(grad: np.ndarray):
        return (grad * factor_arr,)

    return record("scale", (x,), out, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError("add needs equal shapes", expected=a.shape, actual=b.shape)

    def backward(grad: np.ndarray):
        return grad, grad

    return record("add", (a, b), a.data + b.data, backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError("sub needs equal shapes", expected=a.shape, actual=b.shape)

    def backward(grad: np.ndarray):
        return grad, -grad

    return record("sub", (a, b), a.data - b.data, backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equal shapes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError("mul needs equal shapes", expected=a.shape, actual=b.shape)

    def backward(grad: np.ndarray):
        return (grad * b.data if a.requires_grad else None, grad * a.data if b.requires_grad else None)

    return record("mul", (a, b), a.data * b.data, backward)


def tensor_sum(x: Tensor) -> Tensor:
    """Sum of every element, as a scalar."""
    x = as_tensor(x)
    out = np.asarray(_wide_sum(x.data), dtype=x.dtype)

    def backward(grad: np.ndarray):
        return (np.full(x.shape, grad, dtype=x.dtype),)

    return record("sum", (x,), out, backward)


def tensor_mean(x: Tensor) -> Tensor:
    x = as_tensor(x)
    count = x.size
    out = np.asarray(_wide_sum(x.data) / count, dtype=x.dtype)

    def backward(grad: np.ndarray):
        return (np.full(x.shape, grad / count, dtype=x.dtype),)

    return record("mean", (x,), out, backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"cannot concatenate shapes {[t.shape for t in tensors]} on axis {axis}") from e
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(grad: np.ndarray):
        pieces = []
        for t, start, stop in zip(tensors, bounds[:-1], bounds[1:]):
            index = [slice(None)] * grad.ndim
            index[axis] = slice(int(start), int(stop))
            pieces.append(grad[tuple(index)] if t.requires_grad else None)
        return tuple(pieces)

    return record("concat", tensors, out, backward)


def take_rows(x: Tensor, start: int, stop: int) -> Tensor:
    """x[start:stop] along the first axis."""
    x = as_tensor(x)

    def backward(grad: np.ndarray):
        full = np.zeros_like(x.data)
        full[start:stop] = grad
        return (full,)

    return record("take_rows", (x,), x.data[start:stop].copy(), backward)


def diagonal(x: Tensor) -> Tensor:
    """Main diagonal of a square matrix."""
    x = as_tensor(x)
    if x.data.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError(f"diagonal needs a square matrix, got {x.shape}")
    n = x.shape[0]

    def backward(grad: np.ndarray):
        full = np.zeros_like(x.data)
        full[np.arange(n), np.arange(n)] = grad
        return (full,)

    return record("diagonal", (x,), np.diagonal(x.data).copy(), backward)
