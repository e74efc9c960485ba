"""Dense float64 tensors with tape-based reverse-mode differentiation.

Ops record onto the innermost active ``Tape`` of the calling thread. Outside a
tape nothing is recorded, which is how inference runs. ``backward`` replays the
tape of the loss in reverse, hands every leaf its gradient, then clears the tape.
"""
from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from errors import ContractError, DimensionError

logger = logging.getLogger(__name__)

_ids = itertools.count()
_local = threading.local()
_debug = {'check_finite': False}

GELU_C = np.sqrt(2.0 / np.pi)


def set_debug(check_finite: bool = True) -> None:
    """Turn on the NaN/Inf check applied to every op output."""
    _debug['check_finite'] = check_finite


class Tensor:
    __slots__ = ('data', 'requires_grad', 'grad', 'id', 'name', 'tape')

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.id = next(_ids)
        self.name = name
        self.tape: Tape | None = None

    def __repr__(self) -> str:
        label = f' {self.name!r}' if self.name else ''
        return f'<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>'

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def zero_grad(self) -> None:
        self.grad = None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    # Operator sugar so model code reads naturally.
    def __add__(self, other): return add(self, _as_tensor(other))
    def __radd__(self, other): return add(_as_tensor(other), self)
    def __sub__(self, other): return sub(self, _as_tensor(other))
    def __mul__(self, other): return mul(self, _as_tensor(other))
    def __rmul__(self, other): return mul(_as_tensor(other), self)
    def __matmul__(self, other): return matmul(self, other)


def _as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeEntry:
    kind: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    saved: dict[str, Any] = field(default_factory=dict)

    @property
    def input_ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.inputs)

    @property
    def output_id(self) -> int:
        return self.output.id


class Tape:
    """Ordered record of the ops run while it is active (the gradient graph)."""

    def __init__(self):
        self.entries: list[TapeEntry] = []

    def __enter__(self) -> 'Tape':
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack().pop()

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, kind: str, inputs: tuple[Tensor, ...], output: Tensor, saved: dict[str, Any]) -> None:
        output.requires_grad = True
        output.tape = self
        self.entries.append(TapeEntry(kind, inputs, output, saved))

    def clear(self) -> None:
        self.entries.clear()


def _tape_stack() -> list[Tape]:
    stack = getattr(_local, 'stack', None)
    if stack is None:
        stack = _local.stack = []
    return stack


def current_tape() -> Tape | None:
    stack = _tape_stack()
    return stack[-1] if stack else None


def _emit(kind: str, data: np.ndarray, inputs: tuple[Tensor, ...], **saved: Any) -> Tensor:
    if _debug['check_finite'] and not np.all(np.isfinite(data)):
        raise ContractError(f'{kind}: produced non-finite values')
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = False
    out.grad = None
    out.id = next(_ids)
    out.name = None
    out.tape = None
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        tape.record(kind, inputs, out, saved)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(kind: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f'{kind}: shapes {a.shape} and {b.shape} are not compatible') from None


# --- elementwise ------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape('add', a, b)
    return _emit('add', a.data + b.data, (a, b))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape('sub', a, b)
    return _emit('sub', a.data - b.data, (a, b))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape('mul', a, b)
    return _emit('mul', a.data * b.data, (a, b))


def scale(x: Tensor, factor: float) -> Tensor:
    return _emit('scale', x.data * factor, (x,), factor=factor)


def relu(x: Tensor) -> Tensor:
    return _emit('relu', np.maximum(x.data, 0.0), (x,))


def _sigmoid(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    pos = values >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-values[pos]))
    e = np.exp(values[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x: Tensor) -> Tensor:
    return _emit('sigmoid', _sigmoid(x.data), (x,))


def gelu(x: Tensor) -> Tensor:
    # tanh form of gelu
    inner = GELU_C * (x.data + 0.044715 * x.data ** 3)
    t = np.tanh(inner)
    return _emit('gelu', 0.5 * x.data * (1.0 + t), (x,), tanh=t)


_ELEMENTWISE: dict[str, Callable[..., Tensor]] = {
    'add': add,
    'mul': mul,
    'relu': relu,
    'sigmoid': sigmoid,
    'gelu': gelu,
}


def elementwise(op: str, *inputs: Tensor) -> Tensor:
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ContractError(f'unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}') from None
    return fn(*inputs)


def where(cond: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    """Pick ``a`` where ``cond`` holds, else ``b``. ``cond`` is a constant mask."""
    if a.shape != b.shape:
        raise DimensionError(f'where: branch shapes {a.shape} and {b.shape} differ')
    cond = np.broadcast_to(np.asarray(cond, dtype=bool), a.shape)
    return _emit('where', np.where(cond, a.data, b.data), (a, b), cond=cond)


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity outside training or when ``p`` is 0."""
    if not training or p <= 0.0:
        return x
    if rng is None:
        raise ContractError('dropout in training mode needs a random stream')
    mask = (rng.random(x.shape) >= p).astype(np.float64) / (1.0 - p)
    return _emit('dropout', x.data * mask, (x,), mask=mask)


# --- linear algebra and shape ------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes; a 2-D right operand is shared across batch axes.

    A 1-D left operand is a row vector and the result drops that axis again.
    """
    if a.ndim < 1 or b.ndim < 2 or (a.ndim == 1 and b.ndim != 2):
        raise DimensionError(f'matmul: unsupported operand ranks for {a.shape} and {b.shape}')
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f'matmul: inner dimensions differ for {a.shape} and {b.shape}')
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f'matmul: batch dimensions differ for {a.shape} and {b.shape}')
    return _emit('matmul', np.matmul(a.data, b.data), (a, b))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError(f'transpose: {axes} is not a permutation of the axes of {x.shape}')
    return _emit('transpose', np.transpose(x.data, axes), (x,), axes=axes)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(f'reshape: cannot view {x.shape} as {tuple(shape)}') from None
    return _emit('reshape', data, (x,))


def concat(a: Tensor, b: Tensor, axis: int = -1) -> Tensor:
    if a.ndim != b.ndim:
        raise DimensionError(f'concat: ranks differ for {a.shape} and {b.shape}')
    axis = axis % a.ndim
    for i, (sa, sb) in enumerate(zip(a.shape, b.shape)):
        if i != axis and sa != sb:
            raise DimensionError(f'concat: shapes {a.shape} and {b.shape} differ off axis {axis}')
    return _emit('concat', np.concatenate([a.data, b.data], axis=axis), (a, b),
                 axis=axis, split=a.shape[axis])


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    if not tensors:
        raise ContractError('stack: nothing to stack')
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise DimensionError(f'stack: shapes differ: {sorted(shapes)}')
    return _emit('stack', np.stack([t.data for t in tensors]), tuple(tensors))


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    axis = axis % x.ndim
    if not 0 <= start <= stop <= x.shape[axis]:
        raise DimensionError(f'slice: [{start}:{stop}] out of range for axis {axis} of {x.shape}')
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    return _emit('slice', x.data[tuple(index)].copy(), (x,), index=tuple(index))


def take(x: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of ``x`` (axis 0); output shape is ``indices.shape + x.shape[1:]``."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= x.shape[0]):
        raise DimensionError(f'take: indices outside [0, {x.shape[0]}) for {x.shape}')
    return _emit('take', x.data[indices], (x,), indices=indices)


def sum(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return _emit('sum', np.sum(x.data, axis=axis, keepdims=keepdims), (x,), axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    count = x.data.size if axis is None else x.shape[axis]
    return scale(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


# --- normalisation -------------------------------------------------------------

def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if x.ndim == 0 or not -x.ndim <= axis < x.ndim:
        raise DimensionError(f'softmax: axis {axis} invalid for {x.shape}')
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=axis, keepdims=True)
    return _emit('softmax', y, (x,), axis=axis)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(f'layer_norm: gain {gain.shape}/bias {bias.shape} do not match last axis of {x.shape}')
    mu = x.data.mean(axis=-1, keepdims=True)
    centred = x.data - mu
    var = (centred ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv_std
    return _emit('layer_norm', xhat * gain.data + bias.data, (x, gain, bias), xhat=xhat, inv_std=inv_std)


# --- losses --------------------------------------------------------------------

def bce_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross-entropy over every element."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != logits.shape:
        raise DimensionError(f'bce: targets {targets.shape} do not match logits {logits.shape}')
    x = logits.data
    per = np.maximum(x, 0.0) - x * targets + np.log1p(np.exp(-np.abs(x)))
    return _emit('bce', np.array(per.mean()), (logits,), targets=targets)


def softmax_cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy of ``[N, C]`` logits against ``N`` class indices."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise DimensionError(f'cross-entropy: targets {targets.shape} do not fit logits {logits.shape}')
    if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise ContractError(f'cross-entropy: label index outside [0, {logits.shape[1]})')
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(targets)), targets]
    probs = np.exp(shifted - log_z[:, None])
    return _emit('softmax_ce', np.array((log_z - picked).mean()), (logits,), targets=targets, probs=probs)


# --- backward rules --------------------------------------------------------------

def _bw_add(g, e):
    a, b = e.inputs
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


def _bw_sub(g, e):
    a, b = e.inputs
    return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)


def _bw_mul(g, e):
    a, b = e.inputs
    return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)


def _bw_scale(g, e):
    return (g * e.saved['factor'],)


def _bw_relu(g, e):
    return (g * (e.inputs[0].data > 0),)


def _bw_sigmoid(g, e):
    y = e.output.data
    return (g * y * (1.0 - y),)


def _bw_gelu(g, e):
    x = e.inputs[0].data
    t = e.saved['tanh']
    d_inner = GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
    return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * d_inner),)


def _bw_where(g, e):
    cond = e.saved['cond']
    return np.where(cond, g, 0.0), np.where(cond, 0.0, g)


def _bw_dropout(g, e):
    return (g * e.saved['mask'],)


def _bw_matmul(g, e):
    a, b = e.inputs
    if a.ndim == 1:
        return g @ b.data.T, np.outer(a.data, g)
    da = np.matmul(g, np.swapaxes(b.data, -1, -2))
    if b.ndim == 2 and a.ndim > 2:
        db = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
    else:
        db = np.matmul(np.swapaxes(a.data, -1, -2), g)
    return da, db


def _bw_transpose(g, e):
    return (np.transpose(g, np.argsort(e.saved['axes'])),)


def _bw_reshape(g, e):
    return (g.reshape(e.inputs[0].shape),)


def _bw_concat(g, e):
    axis, split = e.saved['axis'], e.saved['split']
    first, second = np.split(g, [split], axis=axis)
    return first, second


def _bw_stack(g, e):
    return tuple(g[i] for i in range(len(e.inputs)))


def _bw_slice(g, e):
    full = np.zeros_like(e.inputs[0].data)
    full[e.saved['index']] = g
    return (full,)


def _bw_take(g, e):
    x = e.inputs[0]
    full = np.zeros_like(x.data)
    np.add.at(full, e.saved['indices'], g)
    return (full,)


def _bw_sum(g, e):
    x = e.inputs[0]
    axis, keepdims = e.saved['axis'], e.saved['keepdims']
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, x.shape).copy(),)


def _bw_softmax(g, e):
    y = e.output.data
    axis = e.saved['axis']
    return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)


def _bw_layer_norm(g, e):
    x, gain, _ = e.inputs
    xhat, inv_std = e.saved['xhat'], e.saved['inv_std']
    width = x.shape[-1]
    dxhat = g * gain.data
    dx = inv_std / width * (width * dxhat
                            - dxhat.sum(axis=-1, keepdims=True)
                            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
    lead = tuple(range(g.ndim - 1))
    return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)


def _bw_bce(g, e):
    logits = e.inputs[0]
    return (g * (_sigmoid(logits.data) - e.saved['targets']) / logits.data.size,)


def _bw_softmax_ce(g, e):
    probs = e.saved['probs'].copy()
    targets = e.saved['targets']
    probs[np.arange(len(targets)), targets] -= 1.0
    return (g * probs / len(targets),)


BACKWARD_RULES: dict[str, Callable[[np.ndarray, TapeEntry], tuple[np.ndarray | None, ...]]] = {
    'add': _bw_add,
    'sub': _bw_sub,
    'mul': _bw_mul,
    'scale': _bw_scale,
    'relu': _bw_relu,
    'sigmoid': _bw_sigmoid,
    'gelu': _bw_gelu,
    'where': _bw_where,
    'dropout': _bw_dropout,
    'matmul': _bw_matmul,
    'transpose': _bw_transpose,
    'reshape': _bw_reshape,
    'concat': _bw_concat,
    'stack': _bw_stack,
    'slice': _bw_slice,
    'take': _bw_take,
    'sum': _bw_sum,
    'softmax': _bw_softmax,
    'layer_norm': _bw_layer_norm,
    'bce': _bw_bce,
    'softmax_ce': _bw_softmax_ce,
}


def backward(loss: Tensor) -> dict[int, np.ndarray]:
    """Replay the loss's tape in reverse; leaves receive ``.grad``.

    Returns the leaf gradients keyed by tensor id. The tape is cleared afterwards.
    """
    if loss.data.size != 1:
        raise ContractError(f'backward: loss must be a scalar, got shape {loss.shape}')
    tape = loss.tape
    if tape is None:
        raise ContractError('backward: loss was not recorded on a tape')

    produced = {entry.output_id for entry in tape.entries}
    pending: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
    leaves: dict[int, np.ndarray] = {}

    for entry in reversed(tape.entries):
        g = pending.pop(entry.output_id, None)
        if g is None:
            continue
        grads = BACKWARD_RULES[entry.kind](g, entry)
        for tensor, grad in zip(entry.inputs, grads):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise DimensionError(f'{entry.kind} backward: gradient {grad.shape} does not match input {tensor.shape}')
            if tensor.id in produced:
                pending[tensor.id] = pending[tensor.id] + grad if tensor.id in pending else grad
            else:
                tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
                leaves[tensor.id] = tensor.grad

    logger.debug('backward replayed %d tape entries', len(tape))
    tape.clear()
    return leaves
