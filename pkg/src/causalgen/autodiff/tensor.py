"""Tape-based reverse-mode automatic differentiation over float64 numpy arrays.

Every operation builds a node that remembers its parents and a closure that
scatters the incoming gradient back to them.  `backward` on a scalar loss
walks the tape in reverse topological order and leaves d(loss)/d(x) in the
`grad` field of every tensor it reaches.  Single precision is never used:
desk-scale models are tiny and float64 keeps finite-difference checks tight.
"""

from __future__ import annotations

import numpy as np


class AutodiffError(Exception):
    """Base class for tape construction and backward-pass failures."""


class ShapeMismatch(AutodiffError):
    """Raised when operand shapes are incompatible for an op."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {self.shapes}")


class Tensor:
    """A float64 array plus the tape bookkeeping needed for backward."""

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    # Operator sugar; all routed through the module-level ops below.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(other, mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __getitem__(self, key):
        return index(self, key)


class Parameter(Tensor):
    """A named, trainable tensor whose gradient persists across ops.

    Gradients are zeroed at optimizer-step boundaries, not between ops, so
    accumulation over a minibatch works out of the box.
    """

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(data)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out_data = a.data + b.data
    except ValueError:
        raise ShapeMismatch("add", a.shape, b.shape) from None
    out = Tensor(out_data, parents=(a, b))

    def backward(grad):
        a._accumulate(_unbroadcast(grad, a.shape))
        b._accumulate(_unbroadcast(grad, b.shape))

    out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out_data = a.data * b.data
    except ValueError:
        raise ShapeMismatch("mul", a.shape, b.shape) from None
    out = Tensor(out_data, parents=(a, b))

    def backward(grad):
        a._accumulate(_unbroadcast(grad * b.data, a.shape))
        b._accumulate(_unbroadcast(grad * a.data, b.shape))

    out._backward = backward
    return out


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data, parents=(a, b))

    def backward(grad):
        a._accumulate(_unbroadcast(grad / b.data, a.shape))
        b._accumulate(_unbroadcast(-grad * a.data / (b.data * b.data), b.shape))

    out._backward = backward
    return out


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)
    out = Tensor(a.data ** exponent, parents=(a,))

    def backward(grad):
        a._accumulate(grad * exponent * a.data ** (exponent - 1.0))

    out._backward = backward
    return out


def matmul(a, b) -> Tensor:
    """Matrix product: 1D/2D combinations, or ND with identical batch dims."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim == 0 or b.ndim == 0:
        raise ShapeMismatch("matmul", a.shape, b.shape)
    if (a.ndim > 2 or b.ndim > 2) and (a.ndim != b.ndim or a.shape[:-2] != b.shape[:-2]):
        raise ShapeMismatch("matmul", a.shape, b.shape)
    if a.shape[-1] != (b.shape[-2] if b.ndim > 1 else b.shape[0]):
        raise ShapeMismatch("matmul", a.shape, b.shape)
    out = Tensor(a.data @ b.data, parents=(a, b))

    def backward(grad):
        ad, bd = a.data, b.data
        if a.ndim == 1 and b.ndim == 1:          # (k,)@(k,) -> ()
            a._accumulate(grad * bd)
            b._accumulate(grad * ad)
        elif a.ndim == 1:                        # (k,)@(k,n) -> (n,)
            a._accumulate(grad @ bd.T)
            b._accumulate(np.outer(ad, grad))
        elif b.ndim == 1:                        # (m,k)@(k,) -> (m,)
            a._accumulate(np.outer(grad, bd))
            b._accumulate(ad.T @ grad)
        else:                                    # batched or plain 2D
            a._accumulate(grad @ np.swapaxes(bd, -1, -2))
            b._accumulate(np.swapaxes(ad, -1, -2) @ grad)

    out._backward = backward
    return out


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), parents=(a,))

    def backward(grad):
        g = np.asarray(grad)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape).copy())

    out._backward = backward
    return out


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape), parents=(a,))

    def backward(grad):
        a._accumulate(grad.reshape(a.shape))

    out._backward = backward
    return out


def swapaxes(a, ax1: int, ax2: int) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.swapaxes(a.data, ax1, ax2), parents=(a,))

    def backward(grad):
        a._accumulate(np.swapaxes(grad, ax1, ax2))

    out._backward = backward
    return out


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeMismatch("transpose", a.shape)
    return swapaxes(a, 0, 1)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                 parents=tuple(tensors))
    sizes = [t.shape[axis] for t in tensors]

    def backward(grad):
        start = 0
        for t, size in zip(tensors, sizes):
            sl = [slice(None)] * grad.ndim
            sl[axis] = slice(start, start + size)
            t._accumulate(grad[tuple(sl)])
            start += size

    out._backward = backward
    return out


def index(a, key) -> Tensor:
    """Basic slicing/integer indexing with scatter-add backward."""
    a = as_tensor(a)
    out = Tensor(a.data[key], parents=(a,))

    def backward(grad):
        full = np.zeros_like(a.data)
        np.add.at(full, key, grad)
        a._accumulate(full)

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

def exp(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.exp(a.data), parents=(a,))

    def backward(grad):
        a._accumulate(grad * out.data)

    out._backward = backward
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data), parents=(a,))

    def backward(grad):
        a._accumulate(grad / a.data)

    out._backward = backward
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.tanh(a.data), parents=(a,))

    def backward(grad):
        a._accumulate(grad * (1.0 - out.data * out.data))

    out._backward = backward
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(s, parents=(a,))

    def backward(grad):
        a._accumulate(grad * out.data * (1.0 - out.data))

    out._backward = backward
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0), parents=(a,))

    def backward(grad):
        a._accumulate(grad * (a.data > 0.0))

    out._backward = backward
    return out


def gelu(a) -> Tensor:
    """tanh-approximation GELU, assembled from primitive ops."""
    c = float(np.sqrt(2.0 / np.pi))
    inner = mul(add(a, mul(power(a, 3.0), 0.044715)), c)
    return mul(mul(a, add(tanh(inner), 1.0)), 0.5)


# ---------------------------------------------------------------------------
# fused neural-net ops
# ---------------------------------------------------------------------------

def softmax(a, axis: int = -1) -> Tensor:
    """Numerically stable softmax; rows sum to 1 to machine precision."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(p, parents=(a,))

    def backward(grad):
        dot = (grad * out.data).sum(axis=axis, keepdims=True)
        a._accumulate(out.data * (grad - dot))

    out._backward = backward
    return out


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale+shift.

    `gamma` and `beta` may be scalars, (d,) vectors, or anything that
    broadcasts against the normalized activations; eps sits inside the square
    root so constant inputs stay finite.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = Tensor(gamma.data * xhat + beta.data, parents=(x, gamma, beta))
    d = x.shape[-1]

    def backward(grad):
        gamma._accumulate(_unbroadcast(grad * xhat, gamma.shape))
        beta._accumulate(_unbroadcast(grad, beta.shape))
        gxhat = grad * gamma.data
        # classic layer-norm backward over the last axis
        dx = inv_std * (gxhat
                        - gxhat.mean(axis=-1, keepdims=True)
                        - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        x._accumulate(dx)

    out._backward = backward
    return out


def embedding_lookup(table, ids) -> Tensor:
    """Gather rows of `table` (V, d) by integer ids; scatter-add backward."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if np.any(ids < 0) or np.any(ids >= table.shape[0]):
        raise ShapeMismatch("embedding_lookup", table.shape, ids.shape)
    out = Tensor(table.data[ids], parents=(table,))

    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, grad)
        table._accumulate(full)

    out._backward = backward
    return out


def cross_entropy(logits, targets) -> Tensor:
    """Mean negative log-likelihood of integer `targets` under row softmax."""
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.ndim != 1 or logits.shape[0] != targets.shape[0]:
        raise ShapeMismatch("cross_entropy", logits.shape, targets.shape)
    if np.any(targets < 0) or np.any(targets >= logits.shape[1]):
        raise ValueError(
            f"cross_entropy: target id out of range for vocab {logits.shape[1]}")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsumexp
    n = targets.shape[0]
    nll = -logp[np.arange(n), targets].mean()
    out = Tensor(nll, parents=(logits,))

    def backward(grad):
        p = np.exp(logp)
        p[np.arange(n), targets] -= 1.0
        logits._accumulate(grad * p / n)

    out._backward = backward
    return out


def affine(x, weight, bias) -> Tensor:
    """x @ W + b."""
    return add(matmul(x, weight), bias)


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Populate `grad` on every tensor reachable from the scalar `loss`."""
    if not isinstance(loss, Tensor):
        raise AutodiffError("backward expects a Tensor")
    if loss.size != 1:
        raise AutodiffError(f"backward expects a scalar loss, got shape {loss.shape}")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack = [(loss, False)]
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

    loss._accumulate(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


_FORWARD_OPS = {
    "matmul": matmul,
    "add": add,
    "softmax": softmax,
    "layer_norm": layer_norm,
    "embedding_lookup": embedding_lookup,
    "cross_entropy": cross_entropy,
    "affine": affine,
}


def forward_op(op: str, *inputs) -> Tensor:
    """Dispatch one of the named core ops; `gru_cell` lives in layers."""
    if op == "gru_cell":
        from .layers import gru_cell
        return gru_cell(*inputs)
    if op not in _FORWARD_OPS:
        raise AutodiffError(f"unknown op {op!r}")
    return _FORWARD_OPS[op](*inputs)
