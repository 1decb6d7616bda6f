"""Binary semantic-equivalence scorer between question pairs.

Both questions are encoded with one shared bidirectional GRU, composed
with elementwise multiplication and projected to two classes.  The
positive-class probability is the generation model's ranking score.
A synthetic paraphrase corpus generator stands in for real question-pair
data: positives are template rewrites, negatives substitute the second
question with the most word-overlapping non-paraphrase in the corpus.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError, UsageError
from .nn import (
    Adam,
    EmbeddingTable,
    GruParams,
    Linear,
    Tensor,
    Vocab,
    encode_bidirectional,
    log_softmax,
    no_grad,
    prefix_params,
    softmax,
)
from .worldgen import CANONICAL, VARIANT, QuestionWorld

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParaphrasePair:
    question_a: tuple[str, ...]
    question_b: tuple[str, ...]
    label: int  # 1 = paraphrase, 0 = not

    def __post_init__(self):
        if not self.question_a or not self.question_b:
            raise DataError("paraphrase pair with an empty question")
        if self.label not in (0, 1):
            raise DataError(f"paraphrase label must be 0/1, got {self.label}")


class ParaphraseModel:
    """Shared biGRU encoder + elementwise product + 2-way softmax."""

    kind = "paraphrase"

    def __init__(self, vocab: Vocab, embed_dim: int, hidden_dim: int,
                 rng: np.random.Generator):
        self.vocab = vocab
        self.emb = EmbeddingTable(vocab, embed_dim, rng)
        self.fwd = GruParams(embed_dim, hidden_dim, rng)
        self.bwd = GruParams(embed_dim, hidden_dim, rng)
        self.proj = Linear(2 * hidden_dim, 2, rng)

    def encode(self, tokens) -> Tensor:
        if not tokens:
            raise NumericError("cannot score an empty question")
        return encode_bidirectional(self.fwd, self.bwd, self.emb, list(tokens))

    def logits(self, a, b) -> Tensor:
        return self.proj(self.encode(a) * self.encode(b))

    def score_tensor(self, a, b) -> Tensor:
        """Differentiable positive-class probability."""
        return softmax(self.logits(a, b)).take([1]).sum()

    def score(self, a, b) -> float:
        with no_grad():
            return self.score_tensor(a, b).item()

    def nll(self, a, b, label: int) -> Tensor:
        return -log_softmax(self.logits(a, b)).take([label]).sum()

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        params = prefix_params("emb", self.emb.named_parameters())
        params += prefix_params("fwd", self.fwd.named_parameters())
        params += prefix_params("bwd", self.bwd.named_parameters())
        params += prefix_params("proj", self.proj.named_parameters())
        return params


@dataclass
class ParaphraseReport:
    seed: int
    config: dict
    epoch_losses: list[float] = field(default_factory=list)
    holdout_accuracy: float | None = None
    wall_seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "model": "paraphrase",
            "seed": self.seed,
            "config": self.config,
            "epoch_losses": self.epoch_losses,
            "holdout_accuracy": self.holdout_accuracy,
            "wall_seconds": self.wall_seconds,
        }


def accuracy(model: ParaphraseModel, pairs: list[ParaphrasePair]) -> float:
    if not pairs:
        raise UsageError("cannot evaluate on an empty pair list")
    hits = 0
    for pair in pairs:
        predicted = 1 if model.score(pair.question_a, pair.question_b) >= 0.5 else 0
        hits += predicted == pair.label
    return hits / len(pairs)


def train_paraphrase(
    model: ParaphraseModel,
    pairs: list[ParaphrasePair],
    epochs: int,
    learning_rate: float = 1e-3,
    batch_size: int = 16,
    seed: int = 0,
    holdout_pairs: list[ParaphrasePair] | None = None,
) -> ParaphraseReport:
    """Cross-entropy training; both labels must be present."""
    labels = {p.label for p in pairs}
    if labels != {0, 1}:
        raise DataError(f"training data must contain both labels, got {sorted(labels)}")
    started = time.perf_counter()
    report = ParaphraseReport(
        seed=seed,
        config={"epochs": epochs, "learning_rate": learning_rate, "batch_size": batch_size},
    )
    params = [t for _, t in model.named_parameters()]
    optimizer = Adam(params, lr=learning_rate)
    rng = np.random.default_rng([seed, 3])
    for _ in range(epochs):
        total = 0.0
        batch: list[Tensor] = []

        def flush():
            if not batch:
                return
            loss = batch[0]
            for extra in batch[1:]:
                loss = loss + extra
            loss = loss * (1.0 / len(batch))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch.clear()

        for index in rng.permutation(len(pairs)):
            pair = pairs[index]
            nll = model.nll(pair.question_a, pair.question_b, pair.label)
            value = nll.item()
            if not np.isfinite(value):
                raise NumericError("paraphrase training diverged")
            total += value
            batch.append(nll)
            if len(batch) >= batch_size:
                flush()
        flush()
        report.epoch_losses.append(total / len(pairs))
    if holdout_pairs:
        report.holdout_accuracy = accuracy(model, holdout_pairs)
    report.wall_seconds = time.perf_counter() - started
    return report


def _co_occurrence(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    return len(set(a) & set(b))


def generate_synthetic_corpus(
    seed: int, n_pairs: int, world: QuestionWorld | None = None
) -> list[ParaphrasePair]:
    """Balanced synthetic paraphrase corpus.

    Positives render one sampled meaning through two templates; each
    negative keeps the first question and swaps in the corpus question
    with the highest co-occurring word count among non-paraphrases.
    """
    if n_pairs < 2:
        raise UsageError("corpus needs at least 2 pairs")
    world = world or QuestionWorld()
    rng = np.random.default_rng(seed)
    n_pos = n_pairs // 2
    positives = []
    for _ in range(n_pos):
        include_object = bool(rng.integers(2))
        meaning = world.random_meaning(rng, include_object)
        positives.append(
            (
                meaning,
                tuple(world.render(meaning, CANONICAL)),
                tuple(world.render(meaning, VARIANT)),
            )
        )
    # candidate pool: every rendered question in the corpus
    pool = []
    for meaning, qa, qb in positives:
        key = world.meaning_key(meaning)
        pool.append((key, qa))
        pool.append((key, qb))
    pairs: list[ParaphrasePair] = []
    for meaning, qa, qb in positives:
        pairs.append(ParaphrasePair(qa, qb, 1))
        key = world.meaning_key(meaning)
        best_q, best_count = None, -1
        for other_key, q in pool:
            if other_key == key:
                continue
            count = _co_occurrence(qb, q)
            if count > best_count:
                best_q, best_count = q, count
        if best_q is None:  # degenerate corpus of one meaning
            continue
        pairs.append(ParaphrasePair(qa, best_q, 0))
    return pairs


def save_corpus(pairs: list[ParaphrasePair], path: str | Path) -> None:
    """Write tab-separated ``label<TAB>question_a<TAB>question_b`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                f"{pair.label}\t{' '.join(pair.question_a)}\t{' '.join(pair.question_b)}\n"
            )


def load_corpus(path: str | Path) -> list[ParaphrasePair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError("expected label<TAB>question_a<TAB>question_b", lineno)
            label, qa, qb = parts
            if label not in ("0", "1"):
                raise DataError(f"label must be 0 or 1, got {label!r}", lineno)
            pairs.append(ParaphrasePair(tuple(qa.split()), tuple(qb.split()), int(label)))
    return pairs


def corpus_vocab(pairs: list[ParaphrasePair]) -> Vocab:
    return Vocab.build(
        [list(p.question_a) for p in pairs] + [list(p.question_b) for p in pairs]
    )
