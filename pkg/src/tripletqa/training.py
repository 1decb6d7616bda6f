"""Margin ranking training, negative sampling, prediction and score fusion."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidatePath, detect_anchors, enumerate_candidates
from .errors import NumericError, UsageError
from .kb import Element, Instance, Occurrence
from .nn import Adam, Tensor, no_grad

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Knobs for margin-ranking training."""

    margin: float = 0.1
    negatives: int = 5
    fuse_lambda: float = 0.5
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    max_hops: int = 2
    early_stop_p1: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.fuse_lambda <= 1.0:
            raise UsageError(f"lambda must be in [0, 1], got {self.fuse_lambda}")
        if self.margin <= 0:
            raise UsageError(f"margin must be positive, got {self.margin}")
        if self.negatives < 1:
            raise UsageError(f"negatives per positive must be >= 1, got {self.negatives}")
        if self.batch_size < 1:
            raise UsageError(f"batch size must be >= 1, got {self.batch_size}")


def ranking_loss(score_pos: float, score_negs: list[float], margin: float) -> float:
    """Summed margin violations: sum over negatives of max(0, m - pos + neg)."""
    return sum(max(0.0, margin - score_pos + neg) for neg in score_negs)


def hinge_loss(pos: Tensor, negs: list[Tensor], margin: float) -> Tensor:
    """Differentiable twin of ranking_loss over score tensors."""
    total = None
    for neg in negs:
        term = (neg - pos + margin).relu()
        total = term if total is None else total + term
    if total is None:
        raise NumericError("hinge loss needs at least one negative")
    return total


@dataclass(frozen=True)
class Candidate:
    """A scoreable answer candidate: occurrence plus optional anchor path."""

    occurrence: Occurrence
    element: Element
    path: CandidatePath | None

    @property
    def hops(self) -> int | None:
        return self.path.hops if self.path is not None else None


def path_candidates(instance: Instance, max_hops: int = 2) -> list[Candidate]:
    """Anchor-reachable candidates (the PCNet / question-generation universe)."""
    anchors = detect_anchors(instance.question_tokens, instance.doc_kb)
    paths = enumerate_candidates(anchors, instance.doc_kb, max_hops=max_hops)
    return [
        Candidate(p.terminal, instance.doc_kb.element_at(p.terminal), p) for p in paths
    ]


def all_argument_candidates(instance: Instance, max_hops: int = 2) -> list[Candidate]:
    """Every argument occurrence (the KVMemNet universe), path-annotated
    where one exists."""
    by_occurrence = {c.occurrence: c for c in path_candidates(instance, max_hops)}
    kb = instance.doc_kb
    return [
        by_occurrence.get(occ)
        or Candidate(occ, kb.element_at(occ), None)
        for occ in kb.occurrences()
    ]


def candidate_universe(kind: str, instance: Instance, max_hops: int = 2) -> list[Candidate]:
    if kind in ("pcnet", "qgnet"):
        return path_candidates(instance, max_hops)
    if kind == "kvmemnet":
        return all_argument_candidates(instance, max_hops)
    raise UsageError(f"unknown model kind {kind!r}")


def sample_negatives(
    instance: Instance,
    candidates: list[Candidate],
    k: int,
    rng: np.random.Generator,
) -> list[Candidate]:
    """Up to k incorrect candidates without replacement, never the gold one."""
    incorrect = [c for c in candidates if c.occurrence != instance.answer]
    if not incorrect:
        logger.warning(
            "doc %s: no incorrect candidate, instance skipped",
            instance.doc_kb.doc_id,
        )
        return []
    if len(incorrect) <= k:
        return list(incorrect)
    picks = rng.choice(len(incorrect), size=k, replace=False)
    return [incorrect[i] for i in picks]


def score_candidates(model, instance: Instance, candidates: list[Candidate]) -> list[Tensor]:
    """Model-appropriate batch scoring with shared per-instance encodings."""
    if model.kind == "pcnet":
        if any(c.path is None for c in candidates):
            raise UsageError("pcnet can only score path-reachable candidates")
        return model.score_paths(
            instance.question_tokens, [c.path for c in candidates], instance.doc_kb
        )
    return model.score_elements(
        instance.question_tokens, [c.element for c in candidates], instance.doc_kb
    )


@dataclass
class Prediction:
    """Ranked candidates with scores; empty ranking means abstention."""

    ranking: list[tuple[Candidate, float]]
    abstained: bool

    @property
    def top(self) -> Candidate | None:
        return self.ranking[0][0] if self.ranking else None


def rank_candidates(candidates: list[Candidate], scores: list[float]) -> Prediction:
    """Sort by score descending; ties keep the canonical candidate order."""
    if len(candidates) != len(scores):
        raise NumericError("candidate/score length mismatch")
    if not candidates:
        return Prediction([], True)
    order = sorted(range(len(candidates)), key=lambda i: -scores[i])
    return Prediction([(candidates[i], scores[i]) for i in order], False)


def predict(model, instance: Instance, max_hops: int = 2) -> Prediction:
    candidates = candidate_universe(model.kind, instance, max_hops)
    if not candidates:
        return Prediction([], True)
    with no_grad():
        scores = [s.item() for s in score_candidates(model, instance, candidates)]
    return rank_candidates(candidates, scores)


def evaluate_p1(model, instances: list[Instance], max_hops: int = 2) -> float:
    """Precision@1 of the model's top-ranked candidate (abstentions wrong)."""
    if not instances:
        raise UsageError("cannot evaluate on an empty instance list")
    hits = 0
    for instance in instances:
        top = predict(model, instance, max_hops).top
        if top is not None and top.occurrence == instance.answer:
            hits += 1
    return hits / len(instances)


@dataclass
class RunReport:
    """Everything needed to reproduce and audit one training run."""

    model: str
    seed: int
    config: dict
    epoch_losses: list[float] = field(default_factory=list)
    dev_p1: list[float] = field(default_factory=list)
    skipped_instances: int = 0
    stopped_early: bool = False
    wall_seconds: float = 0.0

    @property
    def final_dev_p1(self) -> float | None:
        return self.dev_p1[-1] if self.dev_p1 else None

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "seed": self.seed,
            "config": self.config,
            "epoch_losses": self.epoch_losses,
            "dev_p1": self.dev_p1,
            "skipped_instances": self.skipped_instances,
            "stopped_early": self.stopped_early,
            "wall_seconds": self.wall_seconds,
        }


def train_ranker(
    model,
    train_instances: list[Instance],
    config: TrainConfig,
    dev_instances: list[Instance] | None = None,
) -> RunReport:
    """Margin-ranking training of a pcnet/kvmemnet model.

    Instances whose gold answer is outside the model's candidate universe,
    or that have no incorrect candidate, are skipped with a warning.
    """
    if not train_instances:
        raise UsageError("no training instances")
    started = time.perf_counter()
    report = RunReport(model=model.kind, seed=config.seed, config=vars(config).copy())

    usable: list[tuple[Instance, Candidate, list[Candidate]]] = []
    for instance in train_instances:
        candidates = candidate_universe(model.kind, instance, config.max_hops)
        gold = [c for c in candidates if c.occurrence == instance.answer]
        incorrect = [c for c in candidates if c.occurrence != instance.answer]
        if not gold or not incorrect:
            report.skipped_instances += 1
            continue
        usable.append((instance, gold[0], incorrect))
    if report.skipped_instances:
        logger.warning(
            "skipped %d/%d instances without a usable positive/negative pair",
            report.skipped_instances,
            len(train_instances),
        )
    if not usable:
        raise UsageError("no trainable instances after candidate generation")

    params = [t for _, t in model.named_parameters()]
    optimizer = Adam(params, lr=config.learning_rate)
    rng = np.random.default_rng([config.seed, 1])

    for _ in range(config.epochs):
        epoch_loss = 0.0
        batch: list[Tensor] = []

        def flush():
            if not batch:
                return
            total = batch[0]
            for extra in batch[1:]:
                total = total + extra
            loss = total * (1.0 / len(batch))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch.clear()

        for index in rng.permutation(len(usable)):
            instance, gold, incorrect = usable[index]
            negatives = sample_negatives(instance, [gold] + incorrect, config.negatives, rng)
            scores = score_candidates(model, instance, [gold] + negatives)
            loss = hinge_loss(scores[0], scores[1:], config.margin)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(
                    f"training diverged: non-finite loss on doc "
                    f"{instance.doc_kb.doc_id} (epoch {len(report.epoch_losses) + 1})"
                )
            epoch_loss += value
            batch.append(loss)
            if len(batch) >= config.batch_size:
                flush()
        flush()
        report.epoch_losses.append(epoch_loss / len(usable))
        if dev_instances:
            p1 = evaluate_p1(model, dev_instances, config.max_hops)
            report.dev_p1.append(p1)
            if config.early_stop_p1 is not None and p1 >= config.early_stop_p1:
                report.stopped_early = True
                break
    report.wall_seconds = time.perf_counter() - started
    return report


# -- score fusion ----------------------------------------------------------------


def fuse(f_qa: float, f_qg: float, lam: float) -> float:
    """Weighted mixture of the matching score and the generation score."""
    if not 0.0 <= lam <= 1.0:
        raise UsageError(f"lambda must be in [0, 1], got {lam}")
    return lam * f_qa + (1.0 - lam) * f_qg


def minmax_normalize(scores: list[float]) -> list[float]:
    """Per-question rescale to [0, 1]; constant lists map to 0.5."""
    low, high = min(scores), max(scores)
    if high == low:
        return [0.5] * len(scores)
    return [(s - low) / (high - low) for s in scores]


def fused_predict(
    instance: Instance,
    base_model,
    qg_scorer,
    lam: float,
    top_k: int = 10,
    normalize: bool = True,
    max_hops: int = 2,
) -> Prediction:
    """Re-rank the base model's top candidates with the generation score.

    ``qg_scorer(question_tokens, path)`` returns the paraphrase probability
    for a candidate path.  Candidates outside the top_k (or without a
    path) contribute no generation evidence.
    """
    base = predict(base_model, instance, max_hops)
    if base.abstained:
        return base
    candidates = [c for c, _ in base.ranking]
    qa_scores = [s for _, s in base.ranking]
    if normalize:
        qa_scores = minmax_normalize(qa_scores)
    head = candidates[:top_k]
    qg_raw: dict[int, float] = {}
    for i, candidate in enumerate(head):
        if candidate.path is not None:
            qg_raw[i] = qg_scorer(instance.question_tokens, candidate.path)
    if normalize and qg_raw:
        normalized = minmax_normalize(list(qg_raw.values()))
        qg_raw = dict(zip(qg_raw.keys(), normalized))
    fused = []
    for i, candidate in enumerate(candidates):
        f_qg = qg_raw.get(i, 0.0)
        fused.append((candidate, fuse(qa_scores[i], f_qg, lam)))
    order = sorted(range(len(fused)), key=lambda i: -fused[i][1])
    return Prediction([fused[i] for i in order], False)
