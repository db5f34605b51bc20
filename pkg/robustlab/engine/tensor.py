"""
Tensor values and the tape that records differentiable operations.

A ``Tape`` is opened as a context manager; every op executed while it is active
and touching a tensor with ``requires_grad`` appends one ``TapeEntry``. Calling
``backward`` replays the entries in reverse order once, after which the tape is
consumed. Tapes are thread-local: a tape only sees ops run on its own thread.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from robustlab.core.exceptions import ContractError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float32
# float64 is accepted so that finite-difference checks have enough precision
_ALLOWED_DTYPES = (np.float32, np.float64)

ArrayLike = Union[np.ndarray, Sequence[float], float, int]


class Tensor:
    """Row-major float array with an optional gradient slot."""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[np.dtype] = None,
    ):
        array = np.asarray(data)
        if dtype is None:
            dtype = array.dtype if array.dtype in _ALLOWED_DTYPES else DEFAULT_DTYPE
        self.data: np.ndarray = np.ascontiguousarray(array, dtype=dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Share the data but drop gradient tracking."""
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.requires_grad = False
        out.grad = None
        out.name = self.name
        return out

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeEntry:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


@dataclass
class Tape:
    """Ordered record of executed differentiable operations."""

    entries: List[TapeEntry] = field(default_factory=list)
    consumed: bool = False

    def __enter__(self) -> "Tape":
        _active_tapes().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _active_tapes()
        if stack and stack[-1] is self:
            stack.pop()

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward: BackwardFn) -> None:
        if self.consumed:
            raise ContractError("Cannot record onto a tape that has already been consumed by backward")
        self.entries.append(TapeEntry(op=op, inputs=tuple(inputs), output=output, backward=backward))

    def __len__(self) -> int:
        return len(self.entries)


_local = threading.local()


def _active_tapes() -> List[Tape]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def current_tape() -> Optional[Tape]:
    stack = _active_tapes()
    return stack[-1] if stack else None


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def record(op: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward: BackwardFn) -> Tensor:
    """Wrap ``out_data`` in a Tensor and record it on the active tape if needed."""
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=requires_grad, dtype=out_data.dtype)
    if requires_grad:
        tape = current_tape()
        if tape is not None:
            tape.record(op, inputs, out, backward)
    return out


def backward(tape: Tape, loss: Tensor) -> Dict[int, np.ndarray]:
    """
    Propagate d(loss)/d(leaf) for every ``requires_grad`` leaf recorded on the tape.

    Leaves receive their gradient in ``.grad`` exactly once (accumulated over all
    uses first). The tape is consumed.

    Args:
        tape: Tape the loss was built on
        loss: Single-element tensor produced on ``tape``

    Returns:
        Mapping from ``id(leaf)`` to its gradient array
    """
    if tape.consumed:
        raise ContractError("Tape already consumed; run a new forward pass before calling backward again")
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

    produced = {id(entry.output) for entry in tape.entries}
    if id(loss) not in produced:
        raise ContractError("Loss tensor was not produced on this tape")

    leaves: Dict[int, Tensor] = {}
    for entry in tape.entries:
        for tensor in entry.inputs:
            if tensor.requires_grad and id(tensor) not in produced:
                leaves[id(tensor)] = tensor

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}

    for entry in reversed(tape.entries):
        grad_out = grads.pop(id(entry.output), None)
        if grad_out is None:
            continue
        input_grads = entry.backward(grad_out)
        for tensor, grad in zip(entry.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad

    result: Dict[int, np.ndarray] = {}
    for key, tensor in leaves.items():
        grad = grads.get(key)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        tensor.grad = np.asarray(grad, dtype=tensor.dtype).reshape(tensor.shape)
        result[key] = tensor.grad

    tape.consumed = True
    tape.entries.clear()
    logger.debug(f"backward populated {len(result)} leaf gradients")
    return result


class LayerParams(NamedTuple):
    """Weights and bias of one layer."""

    weight: Tensor
    bias: Tensor
