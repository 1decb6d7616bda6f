"""Anchor detection and 1/2-hop candidate path enumeration.

Anchors are document arguments that fuzzily match the question; candidate
answers are argument occurrences reachable from an anchor by traversing
one or two facts.  Two facts are linked when they share an argument by
normalized text.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .kb import Element, DocumentKB, Fact, Instance, Occurrence
from .textops import fuzzy_indicator


@dataclass(frozen=True)
class AnchorMatch:
    """An argument whose words fuzzily overlap the question's words."""

    text: str
    occurrence: Occurrence  # first occurrence in document order
    score: int              # number of (argument word, question word) near-matches

    def __post_init__(self):
        if self.score < 1:
            raise DataError(f"anchor {self.text!r} has score {self.score} < 1")


@dataclass(frozen=True)
class CandidatePath:
    """A path from an anchor argument to a candidate answer occurrence.

    ``elements`` alternates argument and predicate: (anchor, pred) for one
    hop, (anchor, pred1, shared argument, pred2) for two, followed by the
    terminal argument.
    """

    anchor: AnchorMatch
    elements: tuple[Element, ...]
    fact_ids: tuple[str, ...]
    terminal: Occurrence
    hops: int

    def __post_init__(self):
        if self.hops not in (1, 2):
            raise DataError(f"path hops must be 1 or 2, got {self.hops}")
        if len(self.fact_ids) != self.hops:
            raise DataError("path fact count must equal hops")
        if len(self.elements) != 2 * self.hops + 1:
            raise DataError("path element count inconsistent with hops")

    def validate(self, kb: DocumentKB) -> None:
        """Check the structural invariants against the source KB."""
        if kb.element_at(self.terminal).text != self.elements[-1].text:
            raise DataError("terminal element does not match its occurrence")
        if self.terminal == self.anchor.occurrence:
            raise DataError("terminal equals the anchor occurrence")
        if self.elements[-1].text == self.anchor.text:
            raise DataError("terminal shares the anchor's text")
        texts_by_fact = [
            {el.text for _, el in kb.fact(fid).argument_slots()} for fid in self.fact_ids
        ]
        if self.anchor.text not in texts_by_fact[0]:
            raise DataError("first fact does not contain the anchor")
        if self.hops == 2:
            mid = self.elements[2].text
            if mid not in texts_by_fact[0] or mid not in texts_by_fact[1]:
                raise DataError("consecutive facts do not share the middle argument")


def detect_anchors(question_tokens: tuple[str, ...], kb: DocumentKB) -> list[AnchorMatch]:
    """Score every document argument against the question by fuzzy word match.

    The score counts (argument word, question word) pairs at edit
    distance <= 1; arguments scoring >= 1 are returned, best first
    (score descending, then first document position).
    """
    anchors = []
    for text, occurrences in kb.argument_index.items():
        arg_tokens = text.split()
        score = sum(
            fuzzy_indicator(a, q) for a in arg_tokens for q in question_tokens
        )
        if score >= 1:
            anchors.append(AnchorMatch(text, occurrences[0], score))
    anchors.sort(key=lambda a: (-a.score, kb.position(a.occurrence)))
    return anchors


def _facts_with_text(kb: DocumentKB, text: str) -> list[Fact]:
    return [
        kb.fact(occ.fact_id)
        for occ in {o.fact_id: o for o in kb.argument_index.get(text, [])}.values()
    ]


def _slot_element(fact: Fact, text: str) -> Element:
    for _, element in fact.argument_slots():
        if element.text == text:
            return element
    raise DataError(f"fact {fact.id} does not contain argument {text!r}")


def enumerate_candidates(
    anchors: list[AnchorMatch], kb: DocumentKB, max_hops: int = 2
) -> list[CandidatePath]:
    """All candidate paths up to ``max_hops``, one per terminal occurrence.

    When several paths reach the same occurrence the shortest wins; among
    equal-length paths the lexicographically smallest (fact ids, anchor
    position) is kept.  Results are ordered by (hops, document position of
    the terminal).
    """
    if max_hops not in (1, 2):
        raise DataError(f"max_hops must be 1 or 2, got {max_hops}")
    raw: list[CandidatePath] = []
    for anchor in anchors:
        for f1 in _facts_with_text(kb, anchor.text):
            anchor_el = _slot_element(f1, anchor.text)
            for slot, element in f1.argument_slots():
                if element.text == anchor.text:
                    continue
                raw.append(
                    CandidatePath(
                        anchor=anchor,
                        elements=(anchor_el, f1.predicate, element),
                        fact_ids=(f1.id,),
                        terminal=Occurrence(f1.id, slot),
                        hops=1,
                    )
                )
            if max_hops < 2:
                continue
            f1_texts = {el.text for _, el in f1.argument_slots()}
            for f2 in kb.facts:
                if f2.id == f1.id:
                    continue
                f2_texts = {el.text for _, el in f2.argument_slots()}
                for mid in sorted((f1_texts & f2_texts) - {anchor.text}):
                    mid_el = _slot_element(f1, mid)
                    for slot, element in f2.argument_slots():
                        if element.text in (anchor.text, mid):
                            continue
                        raw.append(
                            CandidatePath(
                                anchor=anchor,
                                elements=(anchor_el, f1.predicate, mid_el, f2.predicate, element),
                                fact_ids=(f1.id, f2.id),
                                terminal=Occurrence(f2.id, slot),
                                hops=2,
                            )
                        )
    raw.sort(
        key=lambda p: (p.hops, p.fact_ids, kb.position(p.anchor.occurrence))
    )
    best: dict[Occurrence, CandidatePath] = {}
    for path in raw:
        best.setdefault(path.terminal, path)
    return sorted(
        best.values(), key=lambda p: (p.hops, kb.position(p.terminal))
    )


@dataclass(frozen=True)
class CoverageReport:
    """Fraction of instances whose gold answer is candidate-reachable."""

    num_instances: int
    coverage_1hop: float
    coverage_2hop: float

    def summary(self) -> str:
        return (
            f"coverage over {self.num_instances} instances: "
            f"1-hop {self.coverage_1hop:.3f}, 2-hop {self.coverage_2hop:.3f}"
        )


def coverage_report(instances: list[Instance]) -> CoverageReport:
    """Measure gold-answer reachability through 1-hop and <=2-hop paths."""
    if not instances:
        raise DataError("coverage of an empty instance list is undefined")
    hits1 = hits2 = 0
    for instance in instances:
        anchors = detect_anchors(instance.question_tokens, instance.doc_kb)
        paths = enumerate_candidates(anchors, instance.doc_kb, max_hops=2)
        reached = {p.terminal: p.hops for p in paths}
        hops = reached.get(instance.answer)
        if hops == 1:
            hits1 += 1
        if hops is not None:
            hits2 += 1
    n = len(instances)
    return CoverageReport(n, hits1 / n, hits2 / n)
