"""
Tensor, Parameter and Tape for swinalign.

A Tensor is a dense float64 array with an optional gradient. Operations whose
inputs require grad are recorded on the active Tape in execution order, so the
record is topologically sorted by construction; Tape.backward sweeps it once in
reverse. Leaf tensors (Parameters and user-created tensors) accumulate into
their ``grad``; intermediate gradients live only for the duration of a sweep.

The active tape, the grad-mode flag and the stop-gradient replay buffer are
thread-local, so distinct model instances can train on distinct threads.
"""

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from swinalign.utils.errors import ContractError

_state = threading.local()


def _local():
    if not hasattr(_state, "tapes"):
        _state.tapes = [Tape()]
        _state.grad_enabled = True
        _state.sg_mode = None
        _state.sg_values = []
        _state.sg_cursor = 0
    return _state


class Tensor:
    """
    Dense N-dimensional float64 value array with an attached gradient slot.

    Attributes:
        data (np.ndarray): Row-major float64 values.
        requires_grad (bool): Whether gradients flow into this tensor.
        grad (np.ndarray): Accumulated gradient, same shape as data, or None.
    """

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._tape: Optional["Tape"] = None
        self._generation: Optional[int] = None
        self._retain = False

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        # Takes ownership of an already-computed float64 array without copying.
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.requires_grad = False
        tensor.grad = None
        tensor._tape = None
        tensor._generation = None
        tensor._retain = False
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def retain_grad(self) -> "Tensor":
        """Keep the gradient of this intermediate tensor after a backward sweep."""
        self._retain = True
        return self

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def backward(self, parameters: Optional[Iterable["Tensor"]] = None) -> None:
        backward(self, parameters)

    def __add__(self, other):
        from swinalign.autodiff import ops
        return ops.add(self, other) if isinstance(other, Tensor) else ops.shift(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from swinalign.autodiff import ops
        return ops.sub(self, other) if isinstance(other, Tensor) else ops.shift(self, -other)

    def __rsub__(self, other):
        from swinalign.autodiff import ops
        return ops.shift(ops.neg(self), other)

    def __mul__(self, other):
        from swinalign.autodiff import ops
        return ops.mul(self, other) if isinstance(other, Tensor) else ops.scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from swinalign.autodiff import ops
        if isinstance(other, Tensor):
            raise TypeError("division by a tensor is not supported; scale by a float instead")
        return ops.scale(self, 1.0 / other)

    def __neg__(self):
        from swinalign.autodiff import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from swinalign.autodiff import ops
        return ops.matmul(self, other)

    def reshape(self, *shape) -> "Tensor":
        from swinalign.autodiff import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def permute(self, *axes) -> "Tensor":
        from swinalign.autodiff import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.permute(self, axes)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        from swinalign.autodiff import ops
        return ops.reduce_sum(self, axis)

    def mean(self, axis: int) -> "Tensor":
        from swinalign.autodiff import ops
        return ops.mean_over_axis(self, axis)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """
    A learnable tensor. Parameters always require grad and carry the dotted
    name under which their owning model stores them in checkpoints.
    """

    def __init__(self, data, name: Optional[str] = None):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


@dataclass
class TapeEntry:
    """One recorded operation: its output, inputs and gradient rule."""
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """
    Ordered record of executed operations.

    Used as a context manager the tape becomes the active recording target and
    starts empty; leaving the context restores the previous tape.
    """

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self.generation = 0

    def __enter__(self) -> "Tape":
        self.clear()
        _local().tapes.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        tapes = _local().tapes
        if tapes and tapes[-1] is self:
            tapes.pop()

    def __len__(self) -> int:
        return len(self.entries)

    def clear(self) -> None:
        """Drop all entries; tensors produced before the clear become stale."""
        self.entries = []
        self.generation += 1

    def record(self, op: str, output: Tensor, inputs: Tuple[Tensor, ...], rule) -> None:
        output.requires_grad = True
        output._tape = self
        output._generation = self.generation
        self.entries.append(TapeEntry(op, output, inputs, rule))

    def backward(self, loss: Tensor, parameters: Optional[Iterable[Tensor]] = None) -> None:
        """
        Sweep the record in reverse from a scalar loss.

        :param loss: Scalar tensor produced on this tape.
        :param parameters: Optional parameters that must hold a gradient
                           afterwards; unreachable ones receive zeros.
        """
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._tape is not None and (loss._tape is not self or loss._generation != self.generation):
            raise ContractError("loss was not produced on the current tape")

        seed = np.ones_like(loss.data)
        if loss._tape is None:
            if loss.requires_grad:
                _accumulate(loss, seed)
        else:
            grads = {id(loss): seed}
            for entry in reversed(self.entries):
                upstream = grads.pop(id(entry.output), None)
                if upstream is None:
                    continue
                if entry.output._retain:
                    _accumulate(entry.output, upstream)
                for tensor, grad in zip(entry.inputs, entry.backward(upstream)):
                    if grad is None or not tensor.requires_grad:
                        continue
                    if tensor._tape is None:
                        _accumulate(tensor, grad)
                    else:
                        previous = grads.get(id(tensor))
                        grads[id(tensor)] = grad if previous is None else previous + grad

        for parameter in parameters or ():
            if parameter.grad is None:
                parameter.grad = np.zeros_like(parameter.data)


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    grad = np.asarray(grad, dtype=np.float64).reshape(tensor.shape)
    tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad


def current_tape() -> Tape:
    return _local().tapes[-1]


def is_grad_enabled() -> bool:
    return _local().grad_enabled


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording; used for evaluation and finite differences."""
    state = _local()
    previous = state.grad_enabled
    state.grad_enabled = False
    try:
        yield
    finally:
        state.grad_enabled = previous


def backward(loss: Tensor, parameters: Optional[Iterable[Tensor]] = None) -> None:
    """
    Populate gradients of every leaf reachable from a scalar loss.

    :param loss: Scalar tensor.
    :param parameters: Parameters guaranteed to hold a gradient afterwards.
    """
    tape = loss._tape if loss._tape is not None else current_tape()
    tape.backward(loss, parameters)


@contextmanager
def stop_gradient_capture() -> Iterator[List[np.ndarray]]:
    """Record the forward value of every stop_gradient call, in call order."""
    state = _local()
    previous = (state.sg_mode, state.sg_values, state.sg_cursor)
    state.sg_mode, state.sg_values, state.sg_cursor = "capture", [], 0
    try:
        yield state.sg_values
    finally:
        state.sg_mode, state.sg_values, state.sg_cursor = previous


@contextmanager
def stop_gradient_replay(values: List[np.ndarray]) -> Iterator[None]:
    """Make stop_gradient calls return previously captured values, in order."""
    state = _local()
    previous = (state.sg_mode, state.sg_values, state.sg_cursor)
    state.sg_mode, state.sg_values, state.sg_cursor = "replay", values, 0
    try:
        yield
    finally:
        state.sg_mode, state.sg_values, state.sg_cursor = previous


def _stop_gradient_value(data: np.ndarray) -> np.ndarray:
    state = _local()
    if state.sg_mode == "capture":
        state.sg_values.append(data.copy())
    elif state.sg_mode == "replay":
        if state.sg_cursor >= len(state.sg_values):
            raise ContractError("stop_gradient replay ran out of captured values")
        data = state.sg_values[state.sg_cursor]
        state.sg_cursor += 1
    return data.copy()
