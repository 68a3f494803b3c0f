"""Minimal dense-tensor reverse-mode autodiff with layers and Adam."""

from .tensor import (AutodiffError, Parameter, ShapeMismatch, Tensor, add,
                     affine, as_tensor, backward, concat, cross_entropy, div,
                     embedding_lookup, exp, forward_op, gelu, index, layer_norm,
                     log, matmul, mul, power, relu, reshape, sigmoid, softmax,
                     swapaxes, tanh, tmean, transpose, tsum)
from .layers import (GRU, BiGRUEncoder, Embedding, GRUCell, LayerNorm, Linear,
                     MLP, gru_cell, xavier_uniform)
from .optim import Adam
from .checkpoint import (CheckpointError, assign_parameters, dump_parameters,
                         load_checkpoint, load_parameters, parse_parameters,
                         save_checkpoint, save_parameters)

__all__ = [
    "AutodiffError", "Parameter", "ShapeMismatch", "Tensor", "add", "affine",
    "as_tensor", "backward", "concat", "cross_entropy", "div",
    "embedding_lookup", "exp", "forward_op", "gelu", "index", "layer_norm",
    "log", "matmul", "mul", "power", "relu", "reshape", "sigmoid", "softmax",
    "swapaxes", "tanh", "tmean", "transpose", "tsum",
    "GRU", "BiGRUEncoder", "Embedding", "GRUCell", "LayerNorm", "Linear",
    "MLP", "gru_cell", "xavier_uniform", "Adam",
    "CheckpointError", "assign_parameters", "dump_parameters",
    "load_checkpoint", "load_parameters", "parse_parameters",
    "save_checkpoint", "save_parameters",
]
