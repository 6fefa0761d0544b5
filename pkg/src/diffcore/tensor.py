"""
Reverse-mode automatic differentiation over dense float64 arrays.

Every op appends its output node to the owning Graph, so creation order is a valid
topological order and backward() simply walks the node list in reverse. Tensors are
immutable: gradients live in the map returned by backward(), never on the nodes.
"""

from typing import Callable, Sequence

import numpy as np

from src.diffcore.kernels import MASK_SENTINEL, check_temperature
from src.errors import ContractError, DomainError, NumericalError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Graph:
    """Tape of op records plus the named trainable parameters feeding it."""

    def __init__(self):
        self.parameters: dict[str, Tensor] = {}
        self.nodes: list[Tensor] = []
        # Activation masks of every relu, in creation order (used by gradcheck).
        self.relu_patterns: list[np.ndarray] = []

    def parameter(self, name: str, value: np.ndarray) -> "Tensor":
        if name in self.parameters:
            raise ContractError(f"duplicate parameter name: {name}")
        tensor = Tensor(np.array(value, dtype=np.float64), graph=self, name=name)
        self.parameters[name] = tensor
        return tensor

    def constant(self, value) -> "Tensor":
        return Tensor(np.asarray(value, dtype=np.float64), graph=self, name="const")


class Tensor:
    __slots__ = ("data", "parents", "backward_fn", "op", "graph", "name")

    def __init__(
        self,
        data: np.ndarray,
        parents: tuple["Tensor", ...] = (),
        backward_fn: BackwardFn | None = None,
        op: str = "leaf",
        graph: Graph | None = None,
        name: str = "",
    ):
        self.data = data
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.graph = graph
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("division is only supported by constants")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=np.float64), name="const")


def _node(
    data: np.ndarray, parents: tuple[Tensor, ...], backward_fn: BackwardFn, op: str
) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericalError(op)
    graph = next((p.graph for p in parents if p.graph is not None), None)
    out = Tensor(data, parents, backward_fn, op, graph)
    if graph is not None:
        graph.nodes.append(out)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), backward_fn, "add")


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(a.data - b.data, (a, b), backward_fn, "sub")


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), backward_fn, "mul")


def relu(a: Tensor) -> Tensor:
    active = a.data > 0
    if a.graph is not None:
        a.graph.relu_patterns.append(active)

    def backward_fn(g):
        return (g * active,)

    return _node(np.where(active, a.data, 0.0), (a,), backward_fn, "relu")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def backward_fn(g):
        return (g * out,)

    return _node(out, (a,), backward_fn, "exp")


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise NumericalError("log", "argument must be positive")

    def backward_fn(g):
        return (g / a.data,)

    return _node(np.log(a.data), (a,), backward_fn, "log")


def log1m(a: Tensor, clamp: float = 1.0 - 1e-7) -> Tensor:
    """log(1 - x) with x clamped to at most `clamp`; clamped entries get zero gradient."""
    x = np.minimum(a.data, clamp)
    inside = a.data <= clamp

    def backward_fn(g):
        return (-g / (1.0 - x) * inside,)

    return _node(np.log1p(-x), (a,), backward_fn, "log1m")


# ---------------------------------------------------------------------------
# Reductions and shape
# ---------------------------------------------------------------------------


def sum(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _node(np.asarray(out, dtype=np.float64), (a,), backward_fn, "sum")


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    total = sum(a, axis=axis, keepdims=keepdims)
    count = a.data.size // max(total.data.size, 1)
    return total / float(count)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward_fn(g):
        return (g.reshape(a.shape),)

    return _node(a.data.reshape(shape), (a,), backward_fn, "reshape")


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))

    def backward_fn(g):
        return (g.transpose(inverse),)

    return _node(a.data.transpose(axes), (a,), backward_fn, "transpose")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(_as_tensor(t) for t in tensors)
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward_fn, "concat")


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ContractError("matmul expects operands with at least two axes")
    if a.shape[-1] != b.shape[-2]:
        raise ContractError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward_fn(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _node(a.data @ b.data, (a, b), backward_fn, "matmul")


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup table[ids]; ids may have any shape."""
    ids = np.asarray(ids, dtype=np.int64)

    def backward_fn(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids, g)
        return (grad,)

    return _node(table.data[ids], (table,), backward_fn, "embedding")


# ---------------------------------------------------------------------------
# Softmax family
# ---------------------------------------------------------------------------


def softmax(a: Tensor, mask: np.ndarray | None = None, temperature: float = 1.0) -> Tensor:
    """Masked softmax over the last axis; masked entries are exactly zero."""
    check_temperature(temperature)
    if mask is None:
        keep = np.ones(a.shape, dtype=bool)
    else:
        keep = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape)
        if not keep.any(axis=-1).all():
            raise DomainError("softmax: every entry of a row is masked")

    z = np.where(keep, a.data / temperature, MASK_SENTINEL)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z) * keep
    out = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - inner) / temperature,)

    return _node(out, (a,), backward_fn, "softmax")


def log_softmax(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=-1, keepdims=True)
    out = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))

    def backward_fn(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return _node(out, (a,), backward_fn, "log_softmax")


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer targets under softmax(logits)."""
    targets = np.asarray(targets, dtype=np.int64)
    n_classes = logits.shape[-1]
    if np.any(targets < 0) or np.any(targets >= n_classes):
        raise ContractError("cross_entropy targets out of range")
    onehot = np.eye(n_classes)[targets]
    return -sum(log_softmax(logits) * onehot) / float(len(targets))


def soft_cross_entropy(logits: Tensor, target_dist: np.ndarray) -> Tensor:
    """Mean cross-entropy against a fixed target distribution per row."""
    rows = int(np.prod(logits.shape[:-1]))
    return -sum(log_softmax(logits) * target_dist) / float(rows)


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------


def backward(graph: Graph, loss: Tensor) -> dict[str, np.ndarray]:
    """
    Gradient of a scalar loss with respect to every parameter of the graph.

    Parameters the loss does not depend on get an all-zero gradient.
    """
    if loss.data.size != 1:
        raise ContractError(f"loss must be scalar, got shape {loss.shape}")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        g = grads.get(id(node))
        if g is None or node.backward_fn is None:
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None or (parent.graph is None and parent.backward_fn is None):
                continue
            if not np.all(np.isfinite(pg)):
                raise NumericalError(f"{node.op} (backward)")
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg

    return {
        name: np.array(grads.get(id(p), np.zeros_like(p.data)), dtype=np.float64).reshape(p.shape)
        for name, p in graph.parameters.items()
    }
