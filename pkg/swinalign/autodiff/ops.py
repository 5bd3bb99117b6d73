"""
Differentiable operations for swinalign.

Every operation computes its forward value with numpy, checks it is finite,
and, when grad mode is on and an input requires grad, records a gradient rule
on the active tape. Binary operations require identical shapes: the only
implicit broadcast is tensor-with-scalar (``scale``, ``shift``). Any other
alignment goes through ``expand``.
"""

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from swinalign.autodiff.tensor import (
    Tensor,
    _stop_gradient_value,
    current_tape,
    is_grad_enabled,
)
from swinalign.utils.errors import DimensionError, NumericalError

LN_EPS = 1e-12
L2_EPS = 1e-12

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def _record(op: str, data: np.ndarray, inputs: Tuple[Tensor, ...], rule) -> Tensor:
    data = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"{op} produced non-finite values")
    out = Tensor._wrap(data)
    if is_grad_enabled() and any(t.requires_grad for t in inputs):
        current_tape().record(op, out, inputs, rule)
    return out


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not match")


def _axis(op: str, axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"{op}: axis {axis} is out of range for rank {ndim}")
    return axis % ndim


# ---------------------------------------------------------------- elementwise

def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _record("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return _record("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    a_data, b_data = a.data, b.data
    return _record("mul", a_data * b_data, (a, b), lambda g: (g * b_data, g * a_data))


def scale(x: Tensor, factor: float) -> Tensor:
    factor = float(factor)
    return _record("scale", x.data * factor, (x,), lambda g: (g * factor,))


def shift(x: Tensor, offset: float) -> Tensor:
    offset = float(offset)
    return _record("shift", x.data + offset, (x,), lambda g: (g,))


def neg(x: Tensor) -> Tensor:
    return scale(x, -1.0)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return _record("exp", out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise NumericalError("log of a non-positive value")
    x_data = x.data
    return _record("log", np.log(x_data), (x,), lambda g: (g / x_data,))


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit, tanh approximation."""
    v = x.data
    t = np.tanh(_GELU_C * (v + _GELU_K * v ** 3))
    out = 0.5 * v * (1.0 + t)
    slope = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_K * v * v)
    return _record("gelu", out, (x,), lambda g: (g * slope,))


def sigmoid(x: Tensor) -> Tensor:
    """1 / (1 + e^(-x)), evaluated without overflow for large |x|."""
    v = x.data
    out = np.empty_like(v)
    positive = v >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-v[positive]))
    e = np.exp(v[~positive])
    out[~positive] = e / (1.0 + e)
    return _record("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _record("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def clip(x: Tensor, low: float, high: float) -> Tensor:
    """Clamp to [low, high]; the gradient is zero where the clamp is active."""
    mask = (x.data >= low) & (x.data <= high)
    return _record("clip", np.clip(x.data, low, high), (x,), lambda g: (g * mask,))


_ELEMENTWISE: Dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "gelu": gelu,
    "sigmoid": sigmoid,
    "relu": relu,
}


def elementwise(op: str, *args) -> Tensor:
    """
    Dispatch an elementwise operation by name.

    :param op: One of add, sub, mul, scale, gelu, sigmoid, relu.
    :param args: Tensors (and the factor, for scale).
    """
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"Unknown elementwise op '{op}'. Expected one of {sorted(_ELEMENTWISE)}")
    return fn(*args)


# ---------------------------------------------------------------- linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes; leading (batch) axes must be equal.
    """
    if (
        a.ndim < 2
        or a.ndim != b.ndim
        or a.shape[:-2] != b.shape[:-2]
        or a.shape[-1] != b.shape[-2]
    ):
        raise DimensionError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    a_data, b_data = a.data, b.data

    def rule(g):
        return (
            g @ np.swapaxes(b_data, -1, -2),
            np.swapaxes(a_data, -1, -2) @ g,
        )

    return _record("matmul", a_data @ b_data, (a, b), rule)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    axis = _axis("softmax", axis, x.ndim)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def rule(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _record("softmax", out, (x,), rule)


def layer_normalize(x: Tensor, axis: int = -1, eps: float = LN_EPS) -> Tensor:
    """Zero mean, unit variance along ``axis`` (no affine transform)."""
    axis = _axis("layer_normalize", axis, x.ndim)
    if eps <= 0:
        raise ValueError("layer_normalize eps must be positive")
    centered = x.data - x.data.mean(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=axis, keepdims=True) + eps)
    out = centered * inv_std

    def rule(g):
        mean_g = g.mean(axis=axis, keepdims=True)
        mean_gy = (g * out).mean(axis=axis, keepdims=True)
        return (inv_std * (g - mean_g - out * mean_gy),)

    return _record("layer_normalize", out, (x,), rule)


def l2_normalize(x: Tensor, axis: int = -1, eps: float = L2_EPS) -> Tensor:
    """x / max(||x||_2, eps) along ``axis``."""
    axis = _axis("l2_normalize", axis, x.ndim)
    if eps <= 0:
        raise ValueError("l2_normalize eps must be positive")
    norm = np.sqrt((x.data ** 2).sum(axis=axis, keepdims=True))
    unfloored = norm >= eps
    denom = np.maximum(norm, eps)
    out = x.data / denom

    def rule(g):
        projected = g - out * (g * out).sum(axis=axis, keepdims=True)
        return (np.where(unfloored, projected, g) / denom,)

    return _record("l2_normalize", out, (x,), rule)


def stop_gradient(x: Tensor) -> Tensor:
    """Forward identity that is never recorded, so no gradient reaches x."""
    return Tensor._wrap(_stop_gradient_value(x.data))


# ---------------------------------------------------------------- structural

def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if -1 in shape:
        known = int(np.prod([s for s in shape if s != -1]))
        if shape.count(-1) > 1 or known == 0 or x.size % known:
            raise DimensionError(f"reshape: cannot reshape {x.shape} into {shape}")
        shape = tuple(x.size // known if s == -1 else s for s in shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"reshape: cannot reshape {x.shape} into {shape}")
    source = x.shape
    return _record("reshape", x.data.reshape(shape), (x,), lambda g: (g.reshape(source),))


def permute(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(int(a) for a in axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError(f"permute: {axes} is not a permutation of the axes of {x.shape}")
    inverse = tuple(np.argsort(axes))
    return _record(
        "permute",
        np.ascontiguousarray(np.transpose(x.data, axes)),
        (x,),
        lambda g: (np.transpose(g, inverse),),
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise DimensionError("concat: nothing to concatenate")
    first = tensors[0]
    axis = _axis("concat", axis, first.ndim)
    for t in tensors[1:]:
        if t.ndim != first.ndim or t.shape[:axis] + t.shape[axis + 1:] != first.shape[:axis] + first.shape[axis + 1:]:
            raise DimensionError(
                f"concat: shapes {first.shape} and {t.shape} differ outside axis {axis}"
            )
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def rule(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _record("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, rule)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    axis = _axis("slice_axis", axis, x.ndim)
    if not 0 <= start < stop <= x.shape[axis]:
        raise DimensionError(f"slice_axis: [{start}:{stop}] is out of range for {x.shape} axis {axis}")
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    source = x.shape

    def rule(g):
        full = np.zeros(source)
        full[index] = g
        return (full,)

    return _record("slice_axis", x.data[index].copy(), (x,), rule)


def split(x: Tensor, sections: Union[int, Sequence[int]], axis: int = -1) -> List[Tensor]:
    """
    Split into equal sections (int) or into pieces of the given sizes.
    """
    axis = _axis("split", axis, x.ndim)
    extent = x.shape[axis]
    if isinstance(sections, int):
        if sections <= 0 or extent % sections:
            raise DimensionError(f"split: extent {extent} is not divisible into {sections} sections")
        sizes = [extent // sections] * sections
    else:
        sizes = [int(s) for s in sections]
        if sum(sizes) != extent or any(s <= 0 for s in sizes):
            raise DimensionError(f"split: sizes {sizes} do not partition extent {extent}")
    pieces, start = [], 0
    for size in sizes:
        pieces.append(slice_axis(x, axis, start, start + size))
        start += size
    return pieces


def mean_over_axis(x: Tensor, axis: int) -> Tensor:
    axis = _axis("mean_over_axis", axis, x.ndim)
    count = x.shape[axis]
    source = x.shape

    def rule(g):
        return (np.broadcast_to(np.expand_dims(g, axis), source) / count,)

    return _record("mean_over_axis", x.data.mean(axis=axis), (x,), rule)


def reduce_sum(x: Tensor, axis: Optional[int] = None) -> Tensor:
    source = x.shape
    if axis is None:
        return _record("sum", np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, source) * 1.0,))
    axis = _axis("sum", axis, x.ndim)

    def rule(g):
        return (np.broadcast_to(np.expand_dims(g, axis), source) * 1.0,)

    return _record("sum", x.data.sum(axis=axis), (x,), rule)


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    """
    Explicit broadcast: prepend axes and/or stretch extent-1 axes to ``shape``.
    The gradient sums over every broadcast axis.
    """
    shape = tuple(int(s) for s in shape)
    lead = len(shape) - x.ndim
    if lead < 0 or any(xs not in (1, ts) for xs, ts in zip(x.shape, shape[lead:])):
        raise DimensionError(f"expand: cannot expand {x.shape} to {shape}")
    source = x.shape
    stretched = tuple(i for i, (xs, ts) in enumerate(zip(source, shape[lead:])) if xs == 1 and ts != 1)

    def rule(g):
        reduced = g.sum(axis=tuple(range(lead))) if lead else g
        if stretched:
            reduced = reduced.sum(axis=stretched, keepdims=True)
        return (reduced.reshape(source),)

    return _record("expand", np.broadcast_to(x.data, shape).copy(), (x,), rule)


def roll(x: Tensor, shifts: Sequence[int], axes: Sequence[int]) -> Tensor:
    """Toroidal shift; element i moves to i + shift (mod extent)."""
    shifts, axes = tuple(int(s) for s in shifts), tuple(int(a) for a in axes)
    back = tuple(-s for s in shifts)
    return _record("roll", np.roll(x.data, shifts, axis=axes), (x,), lambda g: (np.roll(g, back, axis=axes),))


def gather(table: Tensor, index: np.ndarray) -> Tensor:
    """Row lookup: out[i...] = table[index[i...]]."""
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= table.shape[0]):
        raise DimensionError(f"gather: index out of range for table of shape {table.shape}")
    source = table.shape

    def rule(g):
        full = np.zeros(source)
        np.add.at(full, index, g)
        return (full,)

    return _record("gather", table.data[index], (table,), rule)


_STRUCTURAL: Dict[str, Callable[..., Union[Tensor, List[Tensor]]]] = {
    "reshape": reshape,
    "permute": permute,
    "concat": concat,
    "split": split,
    "mean_over_axis": mean_over_axis,
}


def structural(op: str, *args, **kwargs):
    """
    Dispatch a value-preserving rearrangement (or mean pooling) by name.

    :param op: One of reshape, permute, concat, split, mean_over_axis.
    """
    try:
        fn = _STRUCTURAL[op]
    except KeyError:
        raise ValueError(f"Unknown structural op '{op}'. Expected one of {sorted(_STRUCTURAL)}")
    return fn(*args, **kwargs)
