"""Embeddings, GRU cells, sequence encoders and softmax."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError, NumericError
from .autodiff import Tensor, concat

PAD = "<pad>"
UNK = "<unk>"
BOS = "<bos>"
EOS = "<eos>"

INIT_SCALE = 0.08


def init_param(rng: np.random.Generator, *shape: int) -> Tensor:
    """Uniform(-0.08, 0.08) trainable tensor."""
    return Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape), requires_grad=True)


class Vocab:
    """Token-to-row mapping with fixed special entries.

    Row 0 is padding (frozen at zero), row 1 the trained unknown token.
    Regular tokens are sorted lexicographically so the mapping is
    independent of data order.
    """

    def __init__(self, tokens: list[str], specials: tuple[str, ...] = ()):
        self._specials = (PAD, UNK) + tuple(specials)
        self._tokens = list(self._specials) + sorted(set(tokens) - set(self._specials))
        self._index = {t: i for i, t in enumerate(self._tokens)}

    @classmethod
    def build(cls, token_lists, specials: tuple[str, ...] = ()) -> "Vocab":
        seen: set[str] = set()
        for tokens in token_lists:
            seen.update(tokens)
        return cls(sorted(seen), specials)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        return self._index.get(token, 1)  # 1 = UNK

    def token(self, index: int) -> str:
        return self._tokens[index]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)


class EmbeddingTable:
    """Trainable |V| x d table; unknown row trains, padding row stays zero."""

    def __init__(self, vocab: Vocab, dim: int, rng: np.random.Generator):
        self.vocab = vocab
        self.dim = dim
        self.weight = init_param(rng, len(vocab), dim)
        self.weight.data[0] = 0.0  # padding row

    def lookup(self, token: str) -> Tensor:
        return self.weight.row(self.vocab.index(token))

    def load_pretrained(self, path: str | Path) -> int:
        """Overwrite rows for vocabulary tokens found in a text embedding file.

        Format: one ``token v1 ... vd`` entry per line.  Returns the number
        of rows initialized.
        """
        loaded = 0
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                token, values = parts[0], parts[1:]
                if token not in self.vocab:
                    continue
                if len(values) != self.dim:
                    raise DataError(
                        f"embedding width {len(values)} != configured dim {self.dim}",
                        lineno,
                    )
                self.weight.data[self.vocab.index(token)] = [float(v) for v in values]
                loaded += 1
        return loaded

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [("weight", self.weight)]


class GruParams:
    """Gate weights for a single gated recurrent cell."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.wz = init_param(rng, hidden_dim, input_dim)
        self.uz = init_param(rng, hidden_dim, hidden_dim)
        self.bz = init_param(rng, hidden_dim)
        self.wr = init_param(rng, hidden_dim, input_dim)
        self.ur = init_param(rng, hidden_dim, hidden_dim)
        self.br = init_param(rng, hidden_dim)
        self.wh = init_param(rng, hidden_dim, input_dim)
        self.uh = init_param(rng, hidden_dim, hidden_dim)
        self.bh = init_param(rng, hidden_dim)

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        z = (self.wz @ x + self.uz @ h + self.bz).sigmoid()
        r = (self.wr @ x + self.ur @ h + self.br).sigmoid()
        cand = (self.wh @ x + self.uh @ (r * h) + self.bh).tanh()
        return z * h + (1.0 - z) * cand

    def initial_state(self) -> Tensor:
        return Tensor(np.zeros(self.hidden_dim))

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [
            ("wz", self.wz), ("uz", self.uz), ("bz", self.bz),
            ("wr", self.wr), ("ur", self.ur), ("br", self.br),
            ("wh", self.wh), ("uh", self.uh), ("bh", self.bh),
        ]


class Linear:
    """Affine map y = W x + b."""

    def __init__(self, input_dim: int, output_dim: int, rng: np.random.Generator,
                 bias: bool = True):
        self.weight = init_param(rng, output_dim, input_dim)
        self.bias = init_param(rng, output_dim) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = self.weight @ x
        return out + self.bias if self.bias is not None else out

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        params = [("weight", self.weight)]
        if self.bias is not None:
            params.append(("bias", self.bias))
        return params


@dataclass
class SequenceEncoding:
    """Per-step hidden states of a recurrent pass plus the final state."""

    states: list[Tensor]
    final: Tensor


def encode_sequence(gru: GruParams, emb: EmbeddingTable, tokens) -> SequenceEncoding:
    """Run the GRU over embedded tokens from a zero initial state."""
    if not tokens:
        raise NumericError("cannot encode an empty token sequence")
    h = gru.initial_state()
    states = []
    for token in tokens:
        h = gru.step(emb.lookup(token), h)
        states.append(h)
    return SequenceEncoding(states=states, final=h)


def encode_bidirectional(
    fwd: GruParams, bwd: GruParams, emb: EmbeddingTable, tokens
) -> Tensor:
    """Concatenated final states of forward and backward passes (dim 2h)."""
    forward = encode_sequence(fwd, emb, list(tokens))
    backward = encode_sequence(bwd, emb, list(reversed(tokens)))
    return concat([forward.final, backward.final])


def softmax(logits: Tensor) -> Tensor:
    """Stable softmax of a vector (max-shifted before exponentiation)."""
    shifted = logits - float(np.max(logits.data))
    e = shifted.exp()
    return e / e.sum()


def log_softmax(logits: Tensor) -> Tensor:
    shifted = logits - float(np.max(logits.data))
    return shifted - shifted.exp().sum().log()


def prefix_params(prefix: str, params: list[tuple[str, Tensor]]) -> list[tuple[str, Tensor]]:
    return [(f"{prefix}.{name}", t) for name, t in params]
