"""Reverse-mode automatic differentiation over numpy float64 arrays.

A Tensor records the ops that produced it; ``backward()`` on a scalar
walks the graph in reverse topological order and accumulates gradients
into every tensor created with ``requires_grad=True``.  Graph recording
can be switched off with ``no_grad()`` for cheap inference passes.

Conventions: vectors are 1-D, matrices 2-D, scalars 0-D.  All values are
float64; gradients have the same shape as their tensor.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import NumericError

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording within the block (forward-only evaluation)."""
    global _grad_enabled
    saved = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = saved


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the parent's shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        if isinstance(data, np.ndarray) and data.dtype == np.float64:
            self.data = data
        else:
            self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- introspection -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, grad={self.requires_grad})"

    def _tracked(self) -> bool:
        return self.requires_grad or bool(self._parents)

    # -- graph construction --------------------------------------------------

    @staticmethod
    def _make(data, parents: tuple["Tensor", ...], backward) -> "Tensor":
        out = Tensor(data)
        if _grad_enabled and any(p._tracked() for p in parents):
            out._parents = parents
            out._backward = backward
        return out

    def _accum(self, grad: np.ndarray) -> None:
        if self.grad is None:
            # leaf parameters own their buffer so later adds can be in place
            self.grad = np.array(grad) if self.requires_grad else grad
        elif self.requires_grad:
            self.grad += grad
        else:
            self.grad = self.grad + grad

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data + other.data

        def backward(g):
            if self._tracked():
                self._accum(_unbroadcast(g, self.data.shape))
            if other._tracked():
                other._accum(_unbroadcast(g, other.data.shape))

        return Tensor._make(out_data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        def backward(g):
            if self._tracked():
                self._accum(-g)

        return Tensor._make(-self.data, (self,), backward)

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data - other.data

        def backward(g):
            if self._tracked():
                self._accum(_unbroadcast(g, self.data.shape))
            if other._tracked():
                other._accum(_unbroadcast(-g, other.data.shape))

        return Tensor._make(out_data, (self, other), backward)

    def __rsub__(self, other):
        return Tensor(other) - self

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data * other.data

        def backward(g):
            if self._tracked():
                self._accum(_unbroadcast(g * other.data, self.data.shape))
            if other._tracked():
                other._accum(_unbroadcast(g * self.data, other.data.shape))

        return Tensor._make(out_data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data / other.data

        def backward(g):
            if self._tracked():
                self._accum(_unbroadcast(g / other.data, self.data.shape))
            if other._tracked():
                other._accum(
                    _unbroadcast(-g * self.data / (other.data**2), other.data.shape)
                )

        return Tensor._make(out_data, (self, other), backward)

    def __matmul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a, b = self.data, other.data
        out_data = a @ b

        def backward(g):
            if self._tracked():
                if a.ndim == 2 and b.ndim == 1:
                    self._accum(np.outer(g, b))
                elif a.ndim == 1 and b.ndim == 1:
                    self._accum(float(g) * b)
                elif a.ndim == 1 and b.ndim == 2:
                    self._accum(b @ g)
                else:
                    self._accum(g @ b.T)
            if other._tracked():
                if a.ndim == 2 and b.ndim == 1:
                    other._accum(a.T @ g)
                elif a.ndim == 1 and b.ndim == 1:
                    other._accum(float(g) * a)
                elif a.ndim == 1 and b.ndim == 2:
                    other._accum(np.outer(a, g))
                else:
                    other._accum(a.T @ g)

        return Tensor._make(out_data, (self, other), backward)

    # -- elementwise functions -------------------------------------------------

    def tanh(self):
        out_data = np.tanh(self.data)

        def backward(g):
            if self._tracked():
                self._accum(g * (1.0 - out_data**2))

        return Tensor._make(out_data, (self,), backward)

    def sigmoid(self):
        out_data = 1.0 / (1.0 + np.exp(-self.data))

        def backward(g):
            if self._tracked():
                self._accum(g * out_data * (1.0 - out_data))

        return Tensor._make(out_data, (self,), backward)

    def exp(self):
        out_data = np.exp(self.data)

        def backward(g):
            if self._tracked():
                self._accum(g * out_data)

        return Tensor._make(out_data, (self,), backward)

    def log(self):
        def backward(g):
            if self._tracked():
                self._accum(g / self.data)

        return Tensor._make(np.log(self.data), (self,), backward)

    def relu(self):
        mask = self.data > 0

        def backward(g):
            if self._tracked():
                self._accum(g * mask)

        return Tensor._make(self.data * mask, (self,), backward)

    # -- reductions and selection ------------------------------------------------

    def sum(self):
        def backward(g):
            if self._tracked():
                self._accum(np.full(self.data.shape, float(g)))

        return Tensor._make(np.asarray(self.data.sum()), (self,), backward)

    def mean(self):
        n = self.data.size

        def backward(g):
            if self._tracked():
                self._accum(np.full(self.data.shape, float(g) / n))

        return Tensor._make(np.asarray(self.data.mean()), (self,), backward)

    def dot(self, other: "Tensor") -> "Tensor":
        out_data = np.asarray(self.data @ other.data)

        def backward(g):
            if self._tracked():
                self._accum(float(g) * other.data)
            if other._tracked():
                other._accum(float(g) * self.data)

        return Tensor._make(out_data, (self, other), backward)

    def row(self, index: int) -> "Tensor":
        """Select one row of a matrix (embedding lookup)."""
        out_data = self.data[index]

        def backward(g):
            if self.requires_grad:
                # sparse in-place accumulation; lookups dominate on tables
                if self.grad is None:
                    self.grad = np.zeros_like(self.data)
                self.grad[index] += g
            elif self._tracked():
                full = np.zeros_like(self.data)
                full[index] = g
                self._accum(full)

        return Tensor._make(out_data, (self,), backward)

    def take(self, indices) -> "Tensor":
        """Gather entries of a vector at the given positions."""
        idx = np.asarray(indices, dtype=np.intp)
        out_data = self.data[idx]

        def backward(g):
            if self._tracked():
                full = np.zeros_like(self.data)
                np.add.at(full, idx, g)
                self._accum(full)

        return Tensor._make(out_data, (self,), backward)

    # -- gradient propagation -------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded graph."""
        if self.size != 1:
            raise NumericError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if not node.requires_grad:
                    node.grad = None  # free intermediate storage


def concat(tensors: list[Tensor]) -> Tensor:
    """Concatenate 1-D tensors."""
    out_data = np.concatenate([t.data for t in tensors])
    sizes = [t.data.shape[0] for t in tensors]

    def backward(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            if t._tracked():
                t._accum(g[offset : offset + size])
            offset += size

    return Tensor._make(out_data, tuple(tensors), backward)


def stack(tensors: list[Tensor]) -> Tensor:
    """Stack 1-D tensors into the rows of a matrix."""
    out_data = np.stack([t.data for t in tensors])

    def backward(g):
        for i, t in enumerate(tensors):
            if t._tracked():
                t._accum(g[i])

    return Tensor._make(out_data, tuple(tensors), backward)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=requires_grad)


def check_finite(t: Tensor, context: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite values in {context}")
    return t
