"""Element encoding shared by the QA models.

Arguments and predicates are encoded to the final state of a GRU pass
over their tokens.  Within one set of parameter values, encodings are
cached by (text, field kind), and an optional external-KB enhancer adds
its retrieved-neighbor contribution on top of the base vector.
"""

from __future__ import annotations

from .kb import Element, PREDICATE
from .nn import EmbeddingTable, GruParams, Tensor, encode_sequence


def element_kind(element: Element) -> str:
    """Retrieval field class: predicates versus everything else."""
    return "predicate" if element.role == PREDICATE else "argument"


class ElementEncoder:
    """Caching GRU encoder for fact elements, optionally KB-enhanced.

    The cache must be reset whenever parameter values change (the training
    loop does so every optimizer step).
    """

    def __init__(self, gru: GruParams, emb: EmbeddingTable, enhancer=None):
        self.gru = gru
        self.emb = emb
        self.enhancer = enhancer
        self._cache: dict[tuple[str, str], Tensor] = {}
        self._base_cache: dict[tuple[str, str], Tensor] = {}

    def reset(self) -> None:
        self._cache.clear()
        self._base_cache.clear()

    def encode_base(self, element: Element) -> Tensor:
        """Plain GRU encoding, no enhancement (used for external facts)."""
        key = (element.text, element_kind(element))
        cached = self._base_cache.get(key)
        if cached is None:
            cached = encode_sequence(self.gru, self.emb, element.tokens).final
            self._base_cache[key] = cached
        return cached

    def encode(self, element: Element) -> Tensor:
        key = (element.text, element_kind(element))
        cached = self._cache.get(key)
        if cached is None:
            cached = self.encode_base(element)
            if self.enhancer is not None:
                delta = self.enhancer.delta(element, self.encode_base)
                if delta is not None:
                    cached = cached + delta
            self._cache[key] = cached
        return cached


def mean_of(tensors: list[Tensor]) -> Tensor:
    total = tensors[0]
    for t in tensors[1:]:
        total = total + t
    return total * (1.0 / len(tensors))
