"""Key-value memory network scorer with multi-hop addressing.

Every fact (subj, pred, obj) contributes two memory slots,
(subj+pred -> obj) and (obj+pred -> subj); multi-object facts contribute
a pair per object.  A query vector repeatedly addresses the keys,
reads a value mixture and is updated with q' = R(q + v_o); after the
configured number of hops the query is dotted with candidate encodings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import ElementEncoder
from .errors import NumericError, UsageError
from .kb import DocumentKB, Element
from .nn import (
    EmbeddingTable,
    GruParams,
    Tensor,
    Vocab,
    concat,
    encode_bidirectional,
    init_param,
    prefix_params,
    softmax,
    stack,
)

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class MemorySlot:
    """One addressable (argument+predicate -> argument) pair."""

    key_argument: Element
    key_predicate: Element
    value_argument: Element
    fact_id: str
    object_index: int
    direction: str

    def describe(self) -> dict:
        return {
            "fact_id": self.fact_id,
            "object_index": self.object_index,
            "direction": self.direction,
            "key": f"({self.key_argument.text}, {self.key_predicate.text})",
            "value": self.value_argument.text,
        }


def build_memory(kb: DocumentKB) -> list[MemorySlot]:
    """Two slots per (fact, object), in (fact, object, direction) order."""
    slots: list[MemorySlot] = []
    for fact in kb.facts:
        for k, obj in enumerate(fact.objects):
            slots.append(MemorySlot(fact.subject, fact.predicate, obj, fact.id, k, FORWARD))
            slots.append(MemorySlot(obj, fact.predicate, fact.subject, fact.id, k, BACKWARD))
    return slots


class KvMemNetModel:
    """BiGRU question encoder over a key-value memory.

    Keys concatenate two h-dim element encodings (2h, matching the
    question vector); values and candidates are projected from h to 2h by
    a learned matrix so the final dot product is well-typed.
    """

    kind = "kvmemnet"

    def __init__(
        self,
        vocab: Vocab,
        embed_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        hops: int = 2,
        enhancer=None,
    ):
        if not 1 <= hops <= 3:
            raise UsageError(f"memory hops must be between 1 and 3, got {hops}")
        self.vocab = vocab
        self.hidden_dim = hidden_dim
        self.hops = hops
        self.emb = EmbeddingTable(vocab, embed_dim, rng)
        self.question_fwd = GruParams(embed_dim, hidden_dim, rng)
        self.question_bwd = GruParams(embed_dim, hidden_dim, rng)
        self.element_gru = GruParams(embed_dim, hidden_dim, rng)
        self.value_proj = init_param(rng, 2 * hidden_dim, hidden_dim)
        # near-identity start keeps the query update residual; a small
        # uniform init shrinks the query over repeated hops and stalls
        # training
        self.hop_matrix = init_param(rng, 2 * hidden_dim, 2 * hidden_dim)
        self.hop_matrix.data += np.eye(2 * hidden_dim)
        self.enhancer = enhancer

    def new_context(self) -> ElementEncoder:
        return ElementEncoder(self.element_gru, self.emb, self.enhancer)

    def encode_question(self, tokens) -> Tensor:
        return encode_bidirectional(self.question_fwd, self.question_bwd, self.emb, tokens)

    # -- memory access -----------------------------------------------------------

    def key_vector(self, slot: MemorySlot, encoder: ElementEncoder) -> Tensor:
        return concat([encoder.encode(slot.key_argument), encoder.encode(slot.key_predicate)])

    def value_vector(self, element: Element, encoder: ElementEncoder) -> Tensor:
        return self.value_proj @ encoder.encode(element)

    def address(self, v_q: Tensor, slots: list[MemorySlot], encoder: ElementEncoder) -> Tensor:
        """Relevance distribution over memory slots: softmax(v_q . v_key)."""
        if not slots:
            raise NumericError("cannot address an empty memory")
        keys = stack([self.key_vector(slot, encoder) for slot in slots])
        return softmax(keys @ v_q)

    def read(self, alpha: Tensor, slots: list[MemorySlot], encoder: ElementEncoder) -> Tensor:
        """Addressing-weighted sum of slot value encodings."""
        if alpha.shape != (len(slots),):
            raise NumericError(
                f"addressing length {alpha.shape} does not match {len(slots)} slots"
            )
        values = stack([self.value_vector(slot.value_argument, encoder) for slot in slots])
        return alpha @ values

    def hop_update(self, v_q: Tensor, v_o: Tensor) -> Tensor:
        if v_q.shape != v_o.shape or v_q.shape[0] != self.hop_matrix.shape[1]:
            raise NumericError("hop update dimensions do not match R")
        return self.hop_matrix @ (v_q + v_o)

    def run_hops(
        self, v_q: Tensor, slots: list[MemorySlot], encoder: ElementEncoder
    ) -> tuple[Tensor, list[Tensor]]:
        """Run the configured hops; returns final query and per-hop addressing."""
        query = v_q
        attention: list[Tensor] = []
        for _ in range(self.hops):
            alpha = self.address(query, slots, encoder)
            attention.append(alpha)
            v_o = self.read(alpha, slots, encoder)
            query = self.hop_update(query, v_o)
        return query, attention

    # -- scoring ---------------------------------------------------------------------

    def score_elements(
        self,
        question_tokens,
        candidates: list[Element],
        kb: DocumentKB,
        return_attention: bool = False,
    ):
        """Scores for candidate argument elements of one question.

        Candidates are encoded exactly like memory values and dotted with
        the final query vector.
        """
        encoder = self.new_context()
        slots = build_memory(kb)
        v_q = self.encode_question(question_tokens)
        final_query, attention = self.run_hops(v_q, slots, encoder)
        scores = [
            final_query.dot(self.value_vector(el, encoder)) for el in candidates
        ]
        if return_attention:
            return scores, slots, attention
        return scores

    def score(self, question_tokens, candidate: Element, kb: DocumentKB) -> Tensor:
        return self.score_elements(question_tokens, [candidate], kb)[0]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        params = prefix_params("emb", self.emb.named_parameters())
        params += prefix_params("question_fwd", self.question_fwd.named_parameters())
        params += prefix_params("question_bwd", self.question_bwd.named_parameters())
        params += prefix_params("element_gru", self.element_gru.named_parameters())
        params.append(("value_proj", self.value_proj))
        params.append(("hop_matrix", self.hop_matrix))
        return params
