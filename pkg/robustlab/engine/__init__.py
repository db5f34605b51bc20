"""Minimal reverse-mode differentiation engine."""

from robustlab.engine.tensor import LayerParams, Tape, Tensor, backward, current_tape
from robustlab.engine.ops import (
    add,
    concat,
    conv2d_forward,
    cosine_similarity,
    dense_forward,
    diagonal,
    global_avg_pool,
    l2_normalize,
    logsumexp,
    matmul,
    mul,
    relu_forward,
    reshape,
    scale,
    softmax_cross_entropy,
    sub,
    take_rows,
    tensor_mean,
    tensor_sum,
    transpose,
)
from robustlab.engine.optim import ParameterSet, sgd_step

__all__ = [
    "LayerParams",
    "ParameterSet",
    "Tape",
    "Tensor",
    "add",
    "backward",
    "concat",
    "conv2d_forward",
    "cosine_similarity",
    "current_tape",
    "dense_forward",
    "diagonal",
    "global_avg_pool",
    "l2_normalize",
    "logsumexp",
    "matmul",
    "mul",
    "relu_forward",
    "reshape",
    "scale",
    "sgd_step",
    "softmax_cross_entropy",
    "sub",
    "take_rows",
    "tensor_mean",
    "tensor_sum",
    "transpose",
]
