"""Layers shared by every trainable model: dense stacks, embeddings, GRU.

All weights are Xavier-uniform from a caller-supplied seeded generator, so a
model's initial state is a pure function of its seed.
"""

from __future__ import annotations

import numpy as np

from .tensor import (Parameter, Tensor, add, affine, concat, layer_norm,
                     matmul, mul, relu, sigmoid, embedding_lookup, tanh)


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


class Linear:
    """y = x @ W + b."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 name: str, bias: bool = True, zero_init: bool = False):
        w = np.zeros((n_in, n_out)) if zero_init else xavier_uniform(rng, n_in, n_out)
        self.weight = Parameter(w, f"{name}.weight")
        self.bias = Parameter(np.zeros(n_out), f"{name}.bias") if bias else None

    def __call__(self, x) -> Tensor:
        out = matmul(x, self.weight)
        if self.bias is not None:
            out = add(out, self.bias)
        return out

    def parameters(self) -> list[Parameter]:
        return [self.weight] + ([self.bias] if self.bias is not None else [])


_ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid}


class MLP:
    """Dense stack with a fixed hidden activation and a linear head."""

    def __init__(self, sizes: list[int], rng: np.random.Generator, name: str,
                 activation: str = "relu"):
        if len(sizes) < 2:
            raise ValueError("MLP needs at least input and output sizes")
        self.activation = _ACTIVATIONS[activation]
        self.layers = [Linear(sizes[i], sizes[i + 1], rng, f"{name}.{i}")
                       for i in range(len(sizes) - 1)]

    def __call__(self, x) -> Tensor:
        for layer in self.layers[:-1]:
            x = self.activation(layer(x))
        return self.layers[-1](x)

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]


class Embedding:
    """Trainable lookup table (n_rows, dim)."""

    def __init__(self, n_rows: int, dim: int, rng: np.random.Generator,
                 name: str, zero_init: bool = False):
        w = np.zeros((n_rows, dim)) if zero_init else \
            xavier_uniform(rng, n_rows, dim)
        self.weight = Parameter(w, f"{name}.weight")

    def __call__(self, ids) -> Tensor:
        return embedding_lookup(self.weight, ids)

    def parameters(self) -> list[Parameter]:
        return [self.weight]


class LayerNorm:
    """Uncontrolled layer norm with learned scalar scale and shift."""

    def __init__(self, name: str, eps: float = 1e-5):
        self.gamma = Parameter(np.array(1.0), f"{name}.gamma")
        self.beta = Parameter(np.array(0.0), f"{name}.beta")
        self.eps = eps

    def __call__(self, x) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta]


def gru_cell(x, h, w_xz, w_hz, b_z, w_xr, w_hr, b_r, w_xn, w_hn, b_n) -> Tensor:
    """Standard update/reset-gate GRU step, built from primitive ops.

    x: (d_in,) or (B, d_in); h: (d_h,) or (B, d_h).  Returns the next hidden
    state with the same leading shape as h.
    """
    z = sigmoid(add(affine(x, w_xz, b_z), matmul(h, w_hz)))
    r = sigmoid(add(affine(x, w_xr, b_r), matmul(h, w_hr)))
    n = tanh(add(affine(x, w_xn, b_n), matmul(mul(r, h), w_hn)))
    one_minus_z = add(mul(z, -1.0), 1.0)
    return add(mul(one_minus_z, n), mul(z, h))


class GRUCell:
    """Parameter bundle for `gru_cell`."""

    def __init__(self, d_in: int, d_h: int, rng: np.random.Generator, name: str):
        self.d_in, self.d_h = d_in, d_h
        def mk(label, fi, fo):
            return Parameter(xavier_uniform(rng, fi, fo), f"{name}.{label}")
        self.w_xz, self.w_hz = mk("w_xz", d_in, d_h), mk("w_hz", d_h, d_h)
        self.w_xr, self.w_hr = mk("w_xr", d_in, d_h), mk("w_hr", d_h, d_h)
        self.w_xn, self.w_hn = mk("w_xn", d_in, d_h), mk("w_hn", d_h, d_h)
        self.b_z = Parameter(np.zeros(d_h), f"{name}.b_z")
        self.b_r = Parameter(np.zeros(d_h), f"{name}.b_r")
        self.b_n = Parameter(np.zeros(d_h), f"{name}.b_n")

    def __call__(self, x, h) -> Tensor:
        return gru_cell(x, h, self.w_xz, self.w_hz, self.b_z,
                        self.w_xr, self.w_hr, self.b_r,
                        self.w_xn, self.w_hn, self.b_n)

    def initial_state(self) -> Tensor:
        return Tensor(np.zeros(self.d_h))

    def parameters(self) -> list[Parameter]:
        return [self.w_xz, self.w_hz, self.w_xr, self.w_hr, self.w_xn,
                self.w_hn, self.b_z, self.b_r, self.b_n]


class GRU:
    """Unidirectional GRU over a sequence of input vectors."""

    def __init__(self, d_in: int, d_h: int, rng: np.random.Generator, name: str):
        self.cell = GRUCell(d_in, d_h, rng, name)

    def __call__(self, inputs: list, h0: Tensor | None = None) -> tuple[list, Tensor]:
        """Run over `inputs` (each (d_in,)); returns (all states, final state)."""
        h = h0 if h0 is not None else self.cell.initial_state()
        states = []
        for x in inputs:
            h = self.cell(x, h)
            states.append(h)
        return states, h

    def parameters(self) -> list[Parameter]:
        return self.cell.parameters()


class BiGRUEncoder:
    """Encode a token-vector sequence to a fixed vector: [fwd_h; bwd_h]."""

    def __init__(self, d_in: int, d_h_each: int, rng: np.random.Generator, name: str):
        self.fwd = GRUCell(d_in, d_h_each, rng, f"{name}.fwd")
        self.bwd = GRUCell(d_in, d_h_each, rng, f"{name}.bwd")
        self.out_dim = 2 * d_h_each

    def __call__(self, inputs: list) -> Tensor:
        if not inputs:
            raise ValueError("BiGRUEncoder needs at least one input vector")
        hf = self.fwd.initial_state()
        for x in inputs:
            hf = self.fwd(x, hf)
        hb = self.bwd.initial_state()
        for x in reversed(inputs):
            hb = self.bwd(x, hb)
        return concat([hf, hb], axis=0)

    def parameters(self) -> list[Parameter]:
        return self.fwd.parameters() + self.bwd.parameters()
