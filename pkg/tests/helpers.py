"""Shared construction helpers and independent oracles used across tests."""

from __future__ import annotations

import numpy as np

from tripletqa.kb import (
    OBJECT,
    PREDICATE,
    SUBJECT,
    DocumentKB,
    Fact,
    Instance,
    Occurrence,
    make_element,
)
from tripletqa.textops import tokenize


def make_fact(fid: str, subject: str, predicate: str, objects) -> Fact:
    if isinstance(objects, str):
        objects = [objects]
    return Fact(
        id=fid,
        subject=make_element(subject, SUBJECT),
        predicate=make_element(predicate, PREDICATE),
        objects=tuple(make_element(o, OBJECT) for o in objects),
    )


def make_kb(triples, doc_id: str = "doc0") -> DocumentKB:
    """Build a DocumentKB from (subject, predicate, objects) tuples."""
    facts = [make_fact(f"f{i}", s, p, o) for i, (s, p, o) in enumerate(triples)]
    return DocumentKB.build(doc_id, facts)


def make_instance(question: str, triples, answer: tuple[str, str],
                  doc_id: str = "doc0") -> Instance:
    kb = make_kb(triples, doc_id)
    return Instance(
        question_text=question,
        question_tokens=tuple(tokenize(question)),
        doc_kb=kb,
        answer=Occurrence(*answer),
    )


def random_kb(rng: np.random.Generator, max_facts: int = 10,
              n_entities: int = 8, n_predicates: int = 4,
              doc_id: str = "rand") -> DocumentKB:
    """Small random KB with a shared entity pool (so facts interlink)."""
    n_facts = int(rng.integers(1, max_facts + 1))
    triples = []
    for _ in range(n_facts):
        subject = f"e{rng.integers(n_entities)}"
        predicate = f"p{rng.integers(n_predicates)}"
        n_objects = int(rng.integers(1, 3))
        objects = [f"e{rng.integers(n_entities)}" for _ in range(n_objects)]
        triples.append((subject, predicate, objects))
    return make_kb(triples, doc_id)


def fact_argument_texts(fact: Fact) -> set[str]:
    return {el.text for _, el in fact.argument_slots()}


def bfs_candidate_oracle(kb: DocumentKB, anchor_texts, max_hops: int) -> dict[Occurrence, int]:
    """Set-based reachability oracle: candidate occurrence -> minimum hops.

    One hop reaches every non-anchor slot of a fact containing the anchor;
    a second hop crosses to any other fact sharing a non-anchor argument
    and reaches its slots other than the shared argument and the anchor.
    """
    reached: dict[Occurrence, int] = {}

    def record(occ: Occurrence, hops: int) -> None:
        if reached.get(occ, 99) > hops:
            reached[occ] = hops

    for anchor in anchor_texts:
        level1 = [f for f in kb.facts if anchor in fact_argument_texts(f)]
        for f1 in level1:
            for slot, el in f1.argument_slots():
                if el.text != anchor:
                    record(Occurrence(f1.id, slot), 1)
            if max_hops < 2:
                continue
            for f2 in kb.facts:
                if f2.id == f1.id:
                    continue
                shared = (fact_argument_texts(f1) & fact_argument_texts(f2)) - {anchor}
                for mid in shared:
                    for slot, el in f2.argument_slots():
                        if el.text not in (anchor, mid):
                            record(Occurrence(f2.id, slot), 2)
    return reached
