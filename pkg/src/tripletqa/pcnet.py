"""Path-and-context matching scorer.

A candidate answer is scored by how well the question vector aligns with
(a) the averaged encoding of the elements on its path from the anchor and
(b) the averaged encoding of its neighbors in the document KB:
score = v_q . v_p + v_q . v_c.
"""

from __future__ import annotations

import numpy as np

from .candidates import CandidatePath
from .encoding import ElementEncoder, mean_of
from .kb import DocumentKB, Element
from .nn import (
    EmbeddingTable,
    GruParams,
    Tensor,
    Vocab,
    encode_bidirectional,
    prefix_params,
)


class PcnetModel:
    """Question biGRU plus element GRU(s) with dot-product scoring.

    The element encoders run at hidden size 2h so element vectors match
    the 2h-dim bidirectional question vector.  By default one element
    encoder is shared between path and context encoding
    (``share_element_encoder=False`` gives the context its own instance).
    """

    kind = "pcnet"

    def __init__(
        self,
        vocab: Vocab,
        embed_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        share_element_encoder: bool = True,
        enhancer=None,
    ):
        self.vocab = vocab
        self.hidden_dim = hidden_dim
        self.emb = EmbeddingTable(vocab, embed_dim, rng)
        self.question_fwd = GruParams(embed_dim, hidden_dim, rng)
        self.question_bwd = GruParams(embed_dim, hidden_dim, rng)
        self.path_gru = GruParams(embed_dim, 2 * hidden_dim, rng)
        self.share_element_encoder = share_element_encoder
        if share_element_encoder:
            self.context_gru = self.path_gru
        else:
            self.context_gru = GruParams(embed_dim, 2 * hidden_dim, rng)
        self.enhancer = enhancer

    # -- encoders ------------------------------------------------------------

    def new_context(self) -> tuple[ElementEncoder, ElementEncoder]:
        path_enc = ElementEncoder(self.path_gru, self.emb, self.enhancer)
        if self.share_element_encoder:
            return path_enc, path_enc
        return path_enc, ElementEncoder(self.context_gru, self.emb, self.enhancer)

    def encode_question(self, tokens) -> Tensor:
        return encode_bidirectional(self.question_fwd, self.question_bwd, self.emb, tokens)

    def encode_path(self, path: CandidatePath, encoder: ElementEncoder) -> Tensor:
        """Mean of the element encodings along the anchor-to-candidate path."""
        return mean_of([encoder.encode(el) for el in path.elements])

    def context_elements(self, terminal: Element, kb: DocumentKB) -> list[Element]:
        """Arguments and predicates co-occurring with the terminal argument."""
        neighbors: list[Element] = []
        for fact in kb.facts:
            texts = {el.text for _, el in fact.argument_slots()}
            if terminal.text not in texts:
                continue
            neighbors.append(fact.predicate)
            neighbors.extend(
                el for _, el in fact.argument_slots() if el.text != terminal.text
            )
        return neighbors

    def encode_context(
        self, path: CandidatePath, kb: DocumentKB, encoder: ElementEncoder
    ) -> Tensor:
        neighbors = self.context_elements(path.elements[-1], kb)
        if not neighbors:
            return Tensor(np.zeros(2 * self.hidden_dim))
        return mean_of([encoder.encode(el) for el in neighbors])

    # -- scoring ---------------------------------------------------------------

    @staticmethod
    def score_from_vectors(v_q: Tensor, v_p: Tensor, v_c: Tensor) -> Tensor:
        return v_q.dot(v_p) + v_q.dot(v_c)

    def score(self, question_tokens, path: CandidatePath, kb: DocumentKB) -> Tensor:
        v_q = self.encode_question(question_tokens)
        path_enc, ctx_enc = self.new_context()
        return self.score_from_vectors(
            v_q, self.encode_path(path, path_enc), self.encode_context(path, kb, ctx_enc)
        )

    def score_paths(self, question_tokens, paths: list[CandidatePath], kb: DocumentKB) -> list[Tensor]:
        """Score many candidates of one question with shared encodings."""
        v_q = self.encode_question(question_tokens)
        path_enc, ctx_enc = self.new_context()
        return [
            self.score_from_vectors(
                v_q,
                self.encode_path(path, path_enc),
                self.encode_context(path, kb, ctx_enc),
            )
            for path in paths
        ]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        params = prefix_params("emb", self.emb.named_parameters())
        params += prefix_params("question_fwd", self.question_fwd.named_parameters())
        params += prefix_params("question_bwd", self.question_bwd.named_parameters())
        params += prefix_params("path_gru", self.path_gru.named_parameters())
        if not self.share_element_encoder:
            params += prefix_params("context_gru", self.context_gru.named_parameters())
        return params
