"""Minimal reverse-mode automatic differentiation over numpy arrays.

A `Tensor` wraps an ndarray and records the ops applied to it; calling
`backward()` on a scalar result accumulates gradients into every tensor
created with `requires_grad=True`. Only the ops this package needs are
implemented (arithmetic with broadcasting, matmul, reductions, exp/log,
maximum, transpose, diag). Everything is deterministic: no threads, no
in-place aliasing tricks, gradients accumulate in graph order.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    # Make numpy defer to our reflected operators instead of building
    # object arrays when an ndarray sits on the left.
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = ()):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None

    # -- graph plumbing ----------------------------------------------------

    @staticmethod
    def _lift(x, dtype) -> "Tensor":
        if isinstance(x, Tensor):
            return x
        return Tensor(np.asarray(x, dtype=dtype))

    def _accumulate(self, grad: np.ndarray) -> None:
        # Assignment on first touch; stored grads are never mutated in
        # place, so adopting the incoming array (possibly a view) is safe.
        self.grad = grad if self.grad is None else self.grad + grad

    @staticmethod
    def _node(data, parents, backward) -> "Tensor":
        out = Tensor(data, _parents=parents)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._backward = backward
        return out

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and (p.requires_grad or p._parents):
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # -- inspection ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = self._lift(other, self.data.dtype)
        a, b = self, other

        def backward(grad):
            if a.requires_grad:
                a._accumulate(_unbroadcast(grad, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(grad, b.data.shape))

        return self._node(a.data + b.data, (a, b), backward)

    def __mul__(self, other):
        other = self._lift(other, self.data.dtype)
        a, b = self, other

        def backward(grad):
            if a.requires_grad:
                a._accumulate(_unbroadcast(grad * b.data, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(grad * a.data, b.data.shape))

        return self._node(a.data * b.data, (a, b), backward)

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a = self

        def backward(grad):
            if a.requires_grad:
                a._accumulate(grad * p * a.data ** (p - 1))

        return self._node(a.data**p, (a,), backward)

    def __matmul__(self, other):
        other = self._lift(other, self.data.dtype)
        a, b = self, other
        if a.data.ndim < 2 or b.data.ndim < 2:
            raise ValueError("matmul operands must be at least 2-D")

        def backward(grad):
            if a.requires_grad:
                ga = grad @ np.swapaxes(b.data, -1, -2)
                a._accumulate(_unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                gb = np.swapaxes(a.data, -1, -2) @ grad
                b._accumulate(_unbroadcast(gb, b.data.shape))

        return self._node(a.data @ b.data, (a, b), backward)

    def __neg__(self):
        return self * -1.0

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        return self + (-self._lift(other, self.data.dtype))

    def __rsub__(self, other):
        return self._lift(other, self.data.dtype) + (-self)

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        other = self._lift(other, self.data.dtype)
        return self * other**-1.0

    def __rtruediv__(self, other):
        return self._lift(other, self.data.dtype) * self**-1.0

    # -- reductions and elementwise functions --------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self
        out_data = a.data.sum(axis=axis, keepdims=keepdims)

        def backward(grad):
            if not a.requires_grad:
                return
            g = grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())

        return self._node(out_data, (a,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def exp(self):
        a = self
        out_data = np.exp(a.data)

        def backward(grad):
            if a.requires_grad:
                a._accumulate(grad * out_data)

        return self._node(out_data, (a,), backward)

    def log(self):
        a = self

        def backward(grad):
            if a.requires_grad:
                a._accumulate(grad / a.data)

        return self._node(np.log(a.data), (a,), backward)

    def maximum(self, other):
        other = self._lift(other, self.data.dtype)
        a, b = self, other
        mask = a.data > b.data

        def backward(grad):
            if a.requires_grad:
                a._accumulate(_unbroadcast(grad * mask, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(grad * ~mask, b.data.shape))

        return self._node(np.maximum(a.data, b.data), (a, b), backward)

    def relu(self):
        return self.maximum(0.0)

    def transpose(self):
        """Swap the last two axes (matrix transpose)."""
        a = self

        def backward(grad):
            if a.requires_grad:
                a._accumulate(np.swapaxes(grad, -1, -2))

        return self._node(np.swapaxes(a.data, -1, -2), (a,), backward)

    @property
    def T(self):
        return self.transpose()

    def reshape(self, *shape):
        a = self
        old_shape = a.data.shape

        def backward(grad):
            if a.requires_grad:
                a._accumulate(grad.reshape(old_shape))

        return self._node(a.data.reshape(*shape), (a,), backward)


def diag(v: Tensor) -> Tensor:
    """Embed a length-n vector as an n-by-n diagonal matrix."""
    if v.data.ndim != 1:
        raise ValueError("diag expects a 1-D tensor")
    a = v

    def backward(grad):
        if a.requires_grad:
            a._accumulate(np.diagonal(grad).copy())

    return Tensor._node(np.diag(a.data), (a,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    # Shift by a detached max: value-identical, gradient-identical, stable.
    shifted = x - Tensor(x.data.max(axis=axis, keepdims=True))
    e = shifted.exp()
    return e / e.sum(axis=axis, keepdims=True)


class Adam:
    """Standard Adam (Kingma & Ba defaults except lr)."""

    def __init__(self, params, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None


class Sgd:
    """Plain gradient descent, for the literal-update training mode."""

    def __init__(self, params, lr: float):
        self.params = list(params)
        self.lr = lr

    def step(self) -> None:
        for p in self.params:
            if p.grad is not None:
                p.data -= self.lr * p.grad

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
