"""
Reverse-mode automatic differentiation on numpy arrays.

A Tensor wraps a float64 array. Operations on tensors that require gradients
record their parents and a backward closure; Tensor.backward() walks the graph
in reverse topological order and accumulates gradients into the leaves.
"""
import logging
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from utils.error_handling import NotScalarError, ShapeMismatchError

logger = logging.getLogger(__name__)

Operand = Union['Tensor', float, int, np.ndarray]


class Tensor:
    """
    Float64 array with an optional gradient and backprop record.

    Attributes:
        data: Value, float64
        grad: Gradient of the last backward() target, same shape as data
        requires_grad: Whether gradients flow into this tensor
        op: Name of the operation that produced the tensor ('' for leaves)
    """

    def __init__(self, data, requires_grad: bool = False, parents: Tuple['Tensor', ...] = (),
                 backward: Optional[Callable[[np.ndarray], None]] = None, op: str = ''):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.op = op

    def __repr__(self) -> str:
        flag = ', requires_grad=True' if self.requires_grad else ''
        return f"Tensor(shape={self.shape}{flag}{', op=' + self.op if self.op else ''})"

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
        return self._backward is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float('nan')

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> 'Tensor':
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """
        Backpropagate from this scalar.

        Leaf gradients accumulate across calls; intermediate gradients are
        recomputed every time.

        Raises:
            NotScalarError: If the tensor has more than one element
        """
        if self.data.size != 1:
            raise NotScalarError(f"backward() needs a scalar, got shape {self.shape}")

        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        for node in order:
            if not node.is_leaf:
                node.grad = None
        self.grad = np.ones_like(self.data) if self.grad is None or not self.is_leaf else self.grad + 1.0
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar

    def __add__(self, other: Operand) -> 'Tensor':
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Operand) -> 'Tensor':
        return sub(self, other)

    def __rsub__(self, other: Operand) -> 'Tensor':
        return sub(other, self)

    def __mul__(self, other: Operand) -> 'Tensor':
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> 'Tensor':
        return mul(self, -1.0)

    def __matmul__(self, other: 'Tensor') -> 'Tensor':
        return matmul(self, other)

    def __getitem__(self, index) -> 'Tensor':
        return getitem(self, index)

    def sum(self, axis=None) -> 'Tensor':
        return tsum(self, axis)

    def mean(self, axis=None) -> 'Tensor':
        return tmean(self, axis)

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(value: Operand) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def accumulate(t: Tensor, g: np.ndarray):
    """Add a gradient contribution to t."""
    if not t.requires_grad:
        return
    if g.shape != t.shape:
        raise ShapeMismatchError(f"gradient shape {g.shape} does not match tensor shape {t.shape}")
    t.grad = g.copy() if t.grad is None else t.grad + g


def make(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None], op: str) -> Tensor:
    """Result tensor of an op; the graph is only recorded when a parent needs gradients."""
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward=backward, op=op)
    return Tensor(data, op=op)


def unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeMismatchError(f"{op}: shapes {a.shape} and {b.shape} are incompatible") from e


# elementwise arithmetic

def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, 'add')

    def backward(g):
        accumulate(a, unbroadcast(g, a.shape))
        accumulate(b, unbroadcast(g, b.shape))

    return make(a.data + b.data, (a, b), backward, 'add')


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, 'sub')

    def backward(g):
        accumulate(a, unbroadcast(g, a.shape))
        accumulate(b, unbroadcast(-g, b.shape))

    return make(a.data - b.data, (a, b), backward, 'sub')


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, 'mul')

    def backward(g):
        accumulate(a, unbroadcast(g * b.data, a.shape))
        accumulate(b, unbroadcast(g * a.data, b.shape))

    return make(a.data * b.data, (a, b), backward, 'mul')


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: shapes {a.shape} and {b.shape} are incompatible")

    def backward(g):
        accumulate(a, g @ b.data.T)
        accumulate(b, a.data.T @ g)

    return make(a.data @ b.data, (a, b), backward, 'matmul')


# reductions and shape

def tsum(x: Tensor, axis=None) -> Tensor:
    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        accumulate(x, np.broadcast_to(g, x.shape).copy())

    return make(np.asarray(x.data.sum(axis=axis)), (x,), backward, 'sum')


def tmean(x: Tensor, axis=None) -> Tensor:
    count = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(tsum(x, axis), 1.0 / count)


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        data = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatchError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from e

    def backward(g):
        accumulate(x, g.reshape(x.shape))

    return make(data, (x,), backward, 'reshape')


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        accumulate(x, g.transpose(inverse))

    return make(x.data.transpose(axes), (x,), backward, 'transpose')


def getitem(x: Tensor, index) -> Tensor:
    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        accumulate(x, full)

    return make(np.array(x.data[index]), (x,), backward, 'getitem')


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ref = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(s != r for i, (s, r) in enumerate(zip(t.shape, ref)) if i != axis % len(ref)):
            raise ShapeMismatchError(f"concat: shapes {ref} and {t.shape} differ outside axis {axis}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            accumulate(t, np.take(g, np.arange(lo, hi), axis=axis))

    return make(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, 'concat')
