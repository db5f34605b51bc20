import logging
from collections import OrderedDict
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from robustlab.core.exceptions import ConfigurationError, DimensionError
from robustlab.engine.tensor import LayerParams, Tensor

logger = logging.getLogger(__name__)


class ParameterSet:
    """
    Named, ordered map from layer identifier to (weight, bias) plus the
    momentum velocity buffers that belong to those tensors.

    Tensor names are ``"<layer>.weight"`` and ``"<layer>.bias"``.
    """

    def __init__(self, layers: Optional[Mapping[str, LayerParams]] = None):
        self.layers: "OrderedDict[str, LayerParams]" = OrderedDict()
        self.velocity: Dict[str, np.ndarray] = {}
        for name, params in (layers or {}).items():
            self.add_layer(name, params.weight, params.bias)

    def add_layer(self, name: str, weight: Tensor, bias: Tensor) -> None:
        weight.requires_grad = True
        bias.requires_grad = True
        weight.name = f"{name}.weight"
        bias.name = f"{name}.bias"
        self.layers[name] = LayerParams(weight, bias)

    def __getitem__(self, name: str) -> LayerParams:
        return self.layers[name]

    def __contains__(self, name: str) -> bool:
        return name in self.layers

    def __len__(self) -> int:
        return len(self.layers)

    def named_tensors(self) -> Iterator[Tuple[str, Tensor]]:
        for name, (weight, bias) in self.layers.items():
            yield f"{name}.weight", weight
            yield f"{name}.bias", bias

    def parameter_count(self) -> int:
        return sum(t.size for _, t in self.named_tensors())

    def zero_grad(self) -> None:
        for _, tensor in self.named_tensors():
            tensor.zero_grad()

    def grads(self) -> Dict[str, np.ndarray]:
        """Current gradient of every tensor (zeros where none was populated)."""
        return {
            name: tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            for name, tensor in self.named_tensors()
        }

    def detached(self) -> "ParameterSet":
        """View sharing the same arrays with gradient tracking switched off."""
        view = ParameterSet.__new__(ParameterSet)
        view.layers = OrderedDict(
            (name, LayerParams(w.detach(), b.detach())) for name, (w, b) in self.layers.items()
        )
        view.velocity = self.velocity
        return view

    def copy(self) -> "ParameterSet":
        clone = ParameterSet()
        for name, (w, b) in self.layers.items():
            clone.add_layer(name, Tensor(w.data.copy()), Tensor(b.data.copy()))
        clone.velocity = {k: v.copy() for k, v in self.velocity.items()}
        return clone

    def state_equal(self, other: "ParameterSet") -> bool:
        """Bit-exact comparison of tensors and velocity buffers."""
        mine = list(self.named_tensors())
        theirs = list(other.named_tensors())
        if [n for n, _ in mine] != [n for n, _ in theirs]:
            return False
        for (_, a), (_, b) in zip(mine, theirs):
            if a.shape != b.shape or a.data.tobytes() != b.data.tobytes():
                return False
        if sorted(self.velocity) != sorted(other.velocity):
            return False
        return all(self.velocity[k].tobytes() == other.velocity[k].tobytes() for k in self.velocity)


def sgd_step(
    params: ParameterSet,
    grads: Optional[Mapping[str, np.ndarray]] = None,
    lr: float = 0.05,
    momentum: float = 0.0,
) -> ParameterSet:
    """
    Classic momentum SGD, in place: v ← μ·v + g, p ← p − lr·v.

    Args:
        params: parameters to update; velocity buffers are kept on the set
        grads: gradient per tensor name; defaults to each tensor's ``.grad``
        lr: learning rate, >= 0 (0 leaves every parameter unchanged)
        momentum: μ in [0, 1)

    Returns:
        The same ParameterSet, updated
    """
    if lr < 0:
        raise ConfigurationError(f"Learning rate must be non-negative, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ConfigurationError(f"Momentum must be in [0, 1), got {momentum}")
    if grads is None:
        grads = params.grads()

    for name, tensor in params.named_tensors():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        if grad.shape != tensor.shape:
            raise DimensionError(f"gradient for {name} has the wrong shape", expected=tensor.shape, actual=grad.shape)
        grad = grad.astype(tensor.dtype, copy=False)

        previous = params.velocity.get(name)
        if previous is None or momentum == 0.0:
            velocity = grad.copy()
        else:
            velocity = previous * np.asarray(momentum, dtype=tensor.dtype) + grad
        params.velocity[name] = velocity
        tensor.data = tensor.data - np.asarray(lr, dtype=tensor.dtype) * velocity

    return params
