"""Hierarchical sequence-to-sequence question generation with copying.

The encoder runs a word-level GRU inside each path element and a
fact-level GRU across element finals; the decoder attends first over
fact states, then over the word states of the best-matching element.
Output distributions mix generation logits over the target vocabulary
with copy logits over source positions under one shared normalizer.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, UsageError
from .kb import Element
from .metrics import bleu
from .nn import (
    BOS,
    EOS,
    PAD,
    Adam,
    EmbeddingTable,
    GruParams,
    Tensor,
    Vocab,
    concat,
    encode_sequence,
    init_param,
    no_grad,
    prefix_params,
    softmax,
    stack,
)

logger = logging.getLogger(__name__)

_MASK = -1e30


def logsumexp(t: Tensor) -> Tensor:
    shift = float(np.max(t.data))
    return ((t - shift).exp().sum()).log() + shift


@dataclass
class HierEncoderOutput:
    """Word- and fact-level states of an encoded candidate path."""

    word_states_per_element: list[list[Tensor]]
    fact_states: list[Tensor]
    final: Tensor
    source_tokens: list[str]
    source_states: list[Tensor]

    @property
    def num_elements(self) -> int:
        return len(self.fact_states)


@dataclass
class DecoderState:
    """Decoder hidden state plus the last attention contexts."""

    h_dec: Tensor
    c_fct: Tensor | None = None
    c_wrd: Tensor | None = None


@dataclass
class CopyDistribution:
    """Merged emission probabilities over vocabulary and source words."""

    tokens: list[str]
    probs: np.ndarray

    def prob(self, token: str) -> float:
        try:
            return float(self.probs[self.tokens.index(token)])
        except ValueError:
            return 0.0

    def total(self) -> float:
        return float(self.probs.sum())


@dataclass
class StepOutput:
    """Raw combined logits of one decode step, before surface merging."""

    state: DecoderState
    logits: Tensor
    gen_tokens: list[str]
    copy_tokens: list[str]

    def token_positions(self, token: str, unk_index: int) -> list[int]:
        positions = []
        try:
            positions.append(self.gen_tokens.index(token))
        except ValueError:
            pass
        offset = len(self.gen_tokens)
        positions.extend(
            offset + i for i, t in enumerate(self.copy_tokens) if t == token
        )
        if not positions:
            positions.append(unk_index)
        return positions

    def nll(self, token: str, unk_index: int) -> Tensor:
        """Negative log probability of a surface token (merged paths)."""
        positions = self.token_positions(token, unk_index)
        return logsumexp(self.logits) - logsumexp(self.logits.take(positions))

    def distribution(self) -> CopyDistribution:
        probs = softmax(self.logits).data
        merged: dict[str, float] = {}
        for token, p in zip(self.gen_tokens + self.copy_tokens, probs):
            merged[token] = merged.get(token, 0.0) + float(p)
        tokens = list(merged)
        return CopyDistribution(tokens, np.array([merged[t] for t in tokens]))


@dataclass
class GeneratedQuestion:
    tokens: list[str]
    log_prob: float

    @property
    def normalized_log_prob(self) -> float:
        return self.log_prob / max(1, len(self.tokens))


class QgModel:
    """Hierarchical encoder-decoder over candidate paths."""

    kind = "qgnet"

    def __init__(
        self,
        full_vocab: Vocab,
        target_vocab: Vocab,
        embed_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        enhancer=None,
    ):
        self.hidden_dim = hidden_dim
        self.emb = EmbeddingTable(full_vocab, embed_dim, rng)
        self.target_vocab = target_vocab
        self.out_emb = EmbeddingTable(target_vocab, embed_dim, rng)
        self.word_gru = GruParams(embed_dim, hidden_dim, rng)
        self.fact_gru = GruParams(hidden_dim, hidden_dim, rng)
        self.decoder_gru = GruParams(embed_dim, hidden_dim, rng)
        self.attention_gru = GruParams(hidden_dim, hidden_dim, rng)
        self.gen_proj = init_param(rng, embed_dim, 2 * hidden_dim)     # W_g
        self.copy_proj = init_param(rng, hidden_dim, hidden_dim)       # W_c
        self.enhance_proj = init_param(rng, hidden_dim, hidden_dim)
        self.enhancer = enhancer
        # generation can never emit padding or the start symbol
        self._gen_mask = np.zeros(len(target_vocab))
        self._gen_mask[target_vocab.index(PAD)] = _MASK
        self._gen_mask[target_vocab.index(BOS)] = _MASK

    # -- encoder ---------------------------------------------------------------

    def _element_delta(self, element: Element, base_cache: dict) -> Tensor | None:
        if self.enhancer is None:
            return None

        def encode_external(el: Element) -> Tensor:
            key = (el.text, el.role)
            if key not in base_cache:
                base_cache[key] = encode_sequence(self.word_gru, self.emb, el.tokens).final
            return base_cache[key]

        delta = self.enhancer.delta(element, encode_external)
        if delta is None:
            return None
        return self.enhance_proj @ delta

    def encode_hierarchical(self, path) -> HierEncoderOutput:
        """Word-level then fact-level encoding of a candidate path."""
        base_cache: dict = {}
        word_states_per_element: list[list[Tensor]] = []
        element_finals: list[Tensor] = []
        source_tokens: list[str] = []
        for element in path.elements:
            states = encode_sequence(self.word_gru, self.emb, element.tokens).states
            delta = self._element_delta(element, base_cache)
            if delta is not None:
                states = [h + delta for h in states]
            word_states_per_element.append(states)
            element_finals.append(states[-1])
            source_tokens.extend(element.tokens)
        fact_states = []
        h = self.fact_gru.initial_state()
        for v in element_finals:
            h = self.fact_gru.step(v, h)
            fact_states.append(h)
        source_states = [s for states in word_states_per_element for s in states]
        return HierEncoderOutput(
            word_states_per_element=word_states_per_element,
            fact_states=fact_states,
            final=h,
            source_tokens=source_tokens,
            source_states=source_states,
        )

    def initial_state(self, enc: HierEncoderOutput) -> DecoderState:
        return DecoderState(h_dec=enc.final)

    # -- attention ----------------------------------------------------------------

    def attend(
        self, prev_h_dec: Tensor, h_dec: Tensor, enc: HierEncoderOutput
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Fact-level then word-level attention; returns (c_fct, c_wrd, alpha).

        Fact weights come from the previous decoder state; the resulting
        context is combined with the current state through a GRU cell and
        then queries the word states of the element holding max weight.
        """
        alpha = softmax(stack(enc.fact_states) @ prev_h_dec)
        attn_sum = alpha @ stack(enc.fact_states)
        c_fct = self.attention_gru.step(attn_sum, h_dec)
        best = int(np.argmax(alpha.data))
        words = enc.word_states_per_element[best]
        beta = softmax(stack(words) @ c_fct)
        c_wrd = beta @ stack(words)
        return c_fct, c_wrd, alpha

    # -- decoding ---------------------------------------------------------------------

    def decode_step(
        self,
        state: DecoderState,
        enc: HierEncoderOutput,
        prev_token: str,
        copy_enabled: bool = True,
        mask_tokens: set[str] | None = None,
    ) -> StepOutput:
        h_t = self.decoder_gru.step(self.emb.lookup(prev_token), state.h_dec)
        c_fct, c_wrd, _ = self.attend(state.h_dec, h_t, enc)
        projected = self.gen_proj @ concat([h_t, c_wrd])
        gen_logits = self.out_emb.weight @ projected + Tensor(self._gen_mask)
        if mask_tokens:
            extra = np.zeros(len(self.target_vocab))
            for token in mask_tokens:
                extra[self.target_vocab.index(token)] = _MASK
            gen_logits = gen_logits + Tensor(extra)
        gen_tokens = self.target_vocab.tokens
        if copy_enabled and enc.source_states:
            # s_c(tau) = c_wrd . tanh(W_c h_wrd_tau)
            copy_logits = stack(
                [(self.copy_proj @ h).tanh() for h in enc.source_states]
            ) @ c_wrd
            logits = concat([gen_logits, copy_logits])
            copy_tokens = list(enc.source_tokens)
        else:
            logits = gen_logits
            copy_tokens = []
        return StepOutput(
            state=DecoderState(h_dec=h_t, c_fct=c_fct, c_wrd=c_wrd),
            logits=logits,
            gen_tokens=gen_tokens,
            copy_tokens=copy_tokens,
        )

    # -- training ------------------------------------------------------------------------

    def sequence_nll(self, path, target_tokens: list[str]) -> Tensor:
        """Teacher-forced negative log likelihood of a target question."""
        enc = self.encode_hierarchical(path)
        state = self.initial_state(enc)
        unk_index = self.target_vocab.index("<unk>")
        total: Tensor | None = None
        prev = BOS
        for token in list(target_tokens) + [EOS]:
            out = self.decode_step(state, enc, prev)
            nll = out.nll(token, unk_index)
            total = nll if total is None else total + nll
            state = out.state
            prev = token
        return total

    # -- inference ------------------------------------------------------------------------

    def beam_search(self, path, beam_width: int = 3, max_len: int = 12) -> GeneratedQuestion:
        """Highest length-normalized log-probability question for a path."""
        if beam_width < 1 or max_len < 1:
            raise UsageError("beam width and max length must be >= 1")
        with no_grad():
            enc = self.encode_hierarchical(path)
            beams = [(0.0, [], self.initial_state(enc), BOS)]
            finished: list[GeneratedQuestion] = []
            for _ in range(max_len):
                expansions: list[tuple[float, list[str], DecoderState, str]] = []
                for log_prob, tokens, state, prev in beams:
                    out = self.decode_step(state, enc, prev)
                    dist = out.distribution()
                    order = np.argsort(-dist.probs)[:beam_width]
                    for idx in order:
                        token = dist.tokens[idx]
                        p = float(dist.probs[idx])
                        if p <= 0.0:
                            continue
                        candidate = (
                            log_prob + float(np.log(p)),
                            tokens + [token],
                            out.state,
                            token,
                        )
                        expansions.append(candidate)
                expansions.sort(key=lambda b: (-b[0], b[1]))
                beams = []
                for log_prob, tokens, state, prev in expansions:
                    if tokens[-1] == EOS:
                        finished.append(GeneratedQuestion(tokens[:-1], log_prob))
                    else:
                        beams.append((log_prob, tokens, state, prev))
                    if len(beams) >= beam_width:
                        break
                if not beams:
                    break
            for log_prob, tokens, _, _ in beams:
                finished.append(GeneratedQuestion(tokens, log_prob))
            if not finished:
                return GeneratedQuestion([], float("-inf"))
            finished.sort(key=lambda g: (-g.normalized_log_prob, g.tokens))
            return finished[0]

    def greedy(self, path, max_len: int = 12) -> GeneratedQuestion:
        return self.beam_search(path, beam_width=1, max_len=max_len)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        params = prefix_params("emb", self.emb.named_parameters())
        params += prefix_params("out_emb", self.out_emb.named_parameters())
        params += prefix_params("word_gru", self.word_gru.named_parameters())
        params += prefix_params("fact_gru", self.fact_gru.named_parameters())
        params += prefix_params("decoder_gru", self.decoder_gru.named_parameters())
        params += prefix_params("attention_gru", self.attention_gru.named_parameters())
        params.append(("gen_proj", self.gen_proj))
        params.append(("copy_proj", self.copy_proj))
        params.append(("enhance_proj", self.enhance_proj))
        return params


@dataclass
class QgReport:
    seed: int
    config: dict
    epoch_losses: list[float] = field(default_factory=list)
    dev_bleu: float | None = None
    wall_seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "model": "qgnet",
            "seed": self.seed,
            "config": self.config,
            "epoch_losses": self.epoch_losses,
            "dev_bleu": self.dev_bleu,
            "wall_seconds": self.wall_seconds,
        }


def build_qg_vocabs(pairs, extra_token_lists=()) -> tuple[Vocab, Vocab]:
    """Full (source+target) and target vocabularies from training pairs."""
    target_lists = [list(question) for _, question in pairs]
    source_lists = [list(el.tokens) for path, _ in pairs for el in path.elements]
    full = Vocab.build(
        target_lists + source_lists + [list(t) for t in extra_token_lists], (BOS, EOS)
    )
    target = Vocab.build(target_lists, (BOS, EOS))
    return full, target


def train_qg(
    model: QgModel,
    pairs: list,
    epochs: int,
    learning_rate: float = 1e-3,
    batch_size: int = 8,
    seed: int = 0,
    dev_pairs: list | None = None,
    beam_width: int = 3,
    max_len: int = 12,
) -> QgReport:
    """Maximum-likelihood training with teacher forcing."""
    if not pairs:
        raise UsageError("no question generation pairs")
    started = time.perf_counter()
    report = QgReport(
        seed=seed,
        config={
            "epochs": epochs,
            "learning_rate": learning_rate,
            "batch_size": batch_size,
            "beam_width": beam_width,
            "max_len": max_len,
        },
    )
    params = [t for _, t in model.named_parameters()]
    optimizer = Adam(params, lr=learning_rate)
    rng = np.random.default_rng([seed, 2])
    for _ in range(epochs):
        total_nll = 0.0
        total_tokens = 0
        batch: list[Tensor] = []
        batch_tokens = 0

        def flush():
            nonlocal batch_tokens
            if not batch:
                return
            loss = batch[0]
            for extra in batch[1:]:
                loss = loss + extra
            loss = loss * (1.0 / batch_tokens)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch.clear()
            batch_tokens = 0

        for index in rng.permutation(len(pairs)):
            path, question = pairs[index]
            nll = model.sequence_nll(path, list(question))
            value = nll.item()
            if not np.isfinite(value):
                raise NumericError("question generation training diverged")
            total_nll += value
            total_tokens += len(question) + 1
            batch.append(nll)
            batch_tokens += len(question) + 1
            if len(batch) >= batch_size:
                flush()
        flush()
        report.epoch_losses.append(total_nll / total_tokens)
    if dev_pairs:
        hypotheses = [
            model.beam_search(path, beam_width, max_len).tokens for path, _ in dev_pairs
        ]
        filled = [h if h else ["<unk>"] for h in hypotheses]
        report.dev_bleu = bleu(filled, [list(q) for _, q in dev_pairs])
    report.wall_seconds = time.perf_counter() - started
    return report


def qg_score(
    question_tokens,
    path,
    qg_model: QgModel,
    paraphrase_model,
    beam_width: int = 3,
    max_len: int = 12,
) -> float:
    """Paraphrase probability between the question and the path's
    generated question."""
    generated = qg_model.beam_search(path, beam_width, max_len)
    if not generated.tokens:
        return 0.0
    return paraphrase_model.score(list(question_tokens), generated.tokens)
