"""Minimal neural substrate: autodiff tensors, GRU encoders, Adam,
gradient checking and checkpoints."""

from .autodiff import Tensor, check_finite, concat, no_grad, stack, zeros
from .checkpoint import load_checkpoint, restore_parameters, save_checkpoint
from .gradcheck import grad_check
from .layers import (
    BOS,
    EOS,
    PAD,
    UNK,
    EmbeddingTable,
    GruParams,
    Linear,
    SequenceEncoding,
    Vocab,
    encode_bidirectional,
    encode_sequence,
    init_param,
    log_softmax,
    prefix_params,
    softmax,
)
from .optim import Adam

__all__ = [
    "Adam",
    "BOS",
    "EOS",
    "EmbeddingTable",
    "GruParams",
    "Linear",
    "PAD",
    "SequenceEncoding",
    "Tensor",
    "UNK",
    "Vocab",
    "check_finite",
    "concat",
    "encode_bidirectional",
    "encode_sequence",
    "grad_check",
    "init_param",
    "load_checkpoint",
    "log_softmax",
    "no_grad",
    "prefix_params",
    "restore_parameters",
    "save_checkpoint",
    "softmax",
    "stack",
    "zeros",
]
