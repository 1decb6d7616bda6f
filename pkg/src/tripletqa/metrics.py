"""Evaluation metrics: precision@1 and corpus BLEU."""

from __future__ import annotations

import math
from collections import Counter

from .errors import DataError
from .kb import Occurrence


def precision_at_1(predictions: list[Occurrence | None], golds: list[Occurrence]) -> float:
    """Fraction of instances whose top-ranked occurrence equals gold.

    ``None`` entries are abstentions and count as wrong.
    """
    if len(predictions) != len(golds):
        raise DataError(
            f"got {len(predictions)} predictions for {len(golds)} gold answers"
        )
    if not golds:
        raise DataError("precision@1 of an empty corpus is undefined")
    hits = sum(1 for p, g in zip(predictions, golds) if p is not None and p == g)
    return hits / len(golds)


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list[list[str]], references: list[list[str]], max_n: int = 4) -> float:
    """Corpus BLEU in [0, 1] with brevity penalty.

    N-gram counts are pooled over the corpus before taking precision
    ratios, so the score is invariant to sentence order.  Precisions for
    n >= 2 use add-one smoothing, which also covers sentences shorter
    than n.
    """
    if not candidates or len(candidates) != len(references):
        raise DataError("BLEU needs equal-length, non-empty corpora")
    if any(not c for c in candidates) or any(not r for r in references):
        raise DataError("BLEU sentences must be non-empty")
    cand_len = sum(len(c) for c in candidates)
    ref_len = sum(len(r) for r in references)
    log_precision_sum = 0.0
    for n in range(1, max_n + 1):
        matches = 0
        total = 0
        for cand, ref in zip(candidates, references):
            cand_counts = _ngram_counts(cand, n)
            ref_counts = _ngram_counts(ref, n)
            matches += sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
            total += max(len(cand) - n + 1, 0)
        if n >= 2:
            precision = (matches + 1.0) / (total + 1.0)
        else:
            if matches == 0:
                return 0.0
            precision = matches / total
        log_precision_sum += math.log(precision) / max_n
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(log_precision_sum)
