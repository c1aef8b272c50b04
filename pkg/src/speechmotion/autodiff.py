"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

A Var wraps an ndarray together with a vector-Jacobian callback; backward()
on a scalar Var walks the graph once in reverse topological order and
accumulates gradients into every reachable node. Only the operations the
networks in this package need are implemented, and everything stays in
float64 so gradient checks against central finite differences are tight.

Graphs are throwaway: build, backward, read `.grad`, drop. Vars are never
mutated in place.
"""

from __future__ import annotations

import numpy as np


class Var:
    """One node of a computation graph: a value plus a gradient slot."""

    __slots__ = ("data", "grad", "_parents", "_vjp")

    def __init__(self, data, _parents=(), _vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._vjp = _vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    # -- graph walk ----------------------------------------------------

    def backward(self) -> None:
        """Accumulate d(self)/d(node) into node.grad for the whole graph."""
        if self.data.shape != ():
            raise ValueError("backward() starts from a scalar Var")
        order: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones(())
        for node in reversed(order):
            if node._vjp is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._vjp(node.grad)):
                if g is None:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    # -- operators -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -as_var(other))

    def __rsub__(self, other):
        return add(as_var(other), -self)

    def __neg__(self):
        return Var(-self.data, (self,), lambda g: (-g,))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


def as_var(value) -> Var:
    return value if isinstance(value, Var) else Var(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    return Var(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    return Var(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def matmul(a, b) -> Var:
    a, b = as_var(a), as_var(b)

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return Var(a.data @ b.data, (a, b), vjp)


def tanh(x: Var) -> Var:
    y = np.tanh(x.data)
    return Var(y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x: Var) -> Var:
    mask = x.data > 0
    return Var(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def exp(x: Var) -> Var:
    y = np.exp(x.data)
    return Var(y, (x,), lambda g: (g * y,))


def log(x: Var) -> Var:
    return Var(np.log(x.data), (x,), lambda g: (g / x.data,))


def sqrt(x: Var) -> Var:
    y = np.sqrt(x.data)
    return Var(y, (x,), lambda g: (g / (2.0 * y),))


def absolute(x: Var) -> Var:
    # Subgradient 0 at exactly 0, the usual convention for L1 objectives.
    return Var(np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),))


def softplus(x: Var) -> Var:
    """log(1 + exp(x)), computed stably; gradient is the logistic sigmoid."""
    return Var(
        np.logaddexp(0.0, x.data),
        (x,),
        lambda g: (g / (1.0 + np.exp(-x.data)),),
    )


def sum(x: Var, axis=None) -> Var:  # noqa: A001 - mirrors numpy naming on purpose
    x = as_var(x)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, x.data.shape).copy(),)
        g_exp = np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp, x.data.shape).copy(),)

    return Var(np.sum(x.data, axis=axis), (x,), vjp)


def mean(x: Var) -> Var:
    x = as_var(x)
    size = x.data.size
    return Var(
        np.mean(x.data),
        (x,),
        lambda g: (np.broadcast_to(g / size, x.data.shape).copy(),),
    )


def concat(parts: list[Var], axis: int = -1) -> Var:
    parts = [as_var(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]
    return Var(
        np.concatenate([p.data for p in parts], axis=axis),
        tuple(parts),
        lambda g: tuple(np.split(g, splits, axis=axis)),
    )


def reshape(x: Var, shape: tuple[int, ...]) -> Var:
    x = as_var(x)
    return Var(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.data.shape),))


def take_rows(x: Var, index: np.ndarray) -> Var:
    """Gather rows by a unique index array (partitioning, not sampling)."""
    index = np.asarray(index, dtype=np.intp)

    def vjp(g):
        gx = np.zeros_like(x.data)
        gx[index] = g
        return (gx,)

    return Var(x.data[index], (x,), vjp)


def scatter_rows(x: Var, index: np.ndarray, n_rows: int) -> Var:
    """Place rows of x at `index` inside an otherwise-zero (n_rows, ...) array."""
    index = np.asarray(index, dtype=np.intp)
    out = np.zeros((n_rows,) + x.data.shape[1:])
    out[index] = x.data
    return Var(out, (x,), lambda g: (g[index],))


def conv1d_same(x: Var, w: Var, b: Var) -> Var:
    """Temporal convolution with same padding.

    x: (B, T, C_in), w: (K, C_in, C_out) with K odd, b: (C_out,).
    Returns (B, T, C_out).
    """
    k = w.data.shape[0]
    if k % 2 == 0:
        raise ValueError("kernel size must be odd for same padding")
    pad = (k - 1) // 2
    t = x.data.shape[1]
    xp = np.pad(x.data, ((0, 0), (pad, pad), (0, 0)))
    y = np.broadcast_to(b.data, x.data.shape[:2] + (w.data.shape[2],)).copy()
    for i in range(k):
        y += xp[:, i : i + t, :] @ w.data[i]

    def vjp(g):
        gb = g.sum(axis=(0, 1))
        gw = np.empty_like(w.data)
        gxp = np.zeros_like(xp)
        for i in range(k):
            seg = xp[:, i : i + t, :]
            gw[i] = np.tensordot(seg, g, axes=([0, 1], [0, 1]))
            gxp[:, i : i + t, :] += g @ w.data[i].T
        return gxp[:, pad : pad + t, :], gw, gb

    return Var(y, (x, w, b), vjp)
