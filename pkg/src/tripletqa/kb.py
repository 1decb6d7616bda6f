"""Domain types for triplet knowledge bases and their loading/validation.

A document arrives pre-extracted as facts (subject, predicate, one or more
objects).  Arguments (subjects and objects) are indexed by normalized text;
predicates are not indexed.  All structures are immutable after
construction and safe for concurrent reads.

Dataset wire format: UTF-8 JSON lines, each with fields ``doc_id``,
``question``, ``facts`` (list of ``{id, subject, predicate, objects}``
where each element is a string) and ``answer``
(``{fact_id, slot}`` with slot ``subject`` or ``object:<k>``).
External-KB fixtures use the same fact schema, one fact per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .textops import normalize_text, tokenize

SUBJECT = "subject"
PREDICATE = "predicate"
OBJECT = "object"

_ROLES = (SUBJECT, PREDICATE, OBJECT)


@dataclass(frozen=True)
class Element:
    """One slot of a fact: an ordered list of lowercase word tokens."""

    tokens: tuple[str, ...]
    role: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise DataError(f"unknown element role {self.role!r}")
        if not self.tokens:
            raise DataError(f"empty {self.role} element")
        if any(not t for t in self.tokens):
            raise DataError(f"empty token in {self.role} element")

    @property
    def text(self) -> str:
        return normalize_text(list(self.tokens))


def make_element(text: str, role: str) -> Element:
    return Element(tuple(tokenize(text)), role)


@dataclass(frozen=True)
class Fact:
    """A triplet with one or more objects."""

    id: str
    subject: Element
    predicate: Element
    objects: tuple[Element, ...]

    def __post_init__(self):
        if not self.objects:
            raise DataError(f"fact {self.id}: needs at least one object")
        if self.subject.role != SUBJECT:
            raise DataError(f"fact {self.id}: subject role mismatch")
        if self.predicate.role != PREDICATE:
            raise DataError(f"fact {self.id}: predicate role mismatch")
        if any(o.role != OBJECT for o in self.objects):
            raise DataError(f"fact {self.id}: object role mismatch")

    def argument_slots(self) -> list[tuple[str, Element]]:
        """(slot name, element) pairs for the subject and each object."""
        slots = [(SUBJECT, self.subject)]
        slots.extend((f"object:{k}", obj) for k, obj in enumerate(self.objects))
        return slots


@dataclass(frozen=True, order=True)
class Occurrence:
    """Reference to one subject/object slot of one fact."""

    fact_id: str
    slot: str


def build_argument_index(facts: list[Fact]) -> dict[str, list[Occurrence]]:
    """Map normalized argument text to its occurrences, in document order.

    Only subjects and objects are indexed; predicates are not arguments.
    """
    index: dict[str, list[Occurrence]] = {}
    for fact in facts:
        for slot, element in fact.argument_slots():
            index.setdefault(element.text, []).append(Occurrence(fact.id, slot))
    return index


@dataclass(frozen=True)
class DocumentKB:
    """The fact set extracted from one document."""

    doc_id: str
    facts: tuple[Fact, ...]
    argument_index: dict[str, list[Occurrence]] = field(compare=False)
    _facts_by_id: dict[str, Fact] = field(compare=False, repr=False)
    _occurrence_order: dict[Occurrence, int] = field(compare=False, repr=False)

    @classmethod
    def build(cls, doc_id: str, facts: list[Fact]) -> "DocumentKB":
        by_id: dict[str, Fact] = {}
        for fact in facts:
            if fact.id in by_id:
                raise DataError(f"doc {doc_id}: duplicate fact id {fact.id!r}")
            by_id[fact.id] = fact
        order: dict[Occurrence, int] = {}
        for fact in facts:
            for slot, _ in fact.argument_slots():
                order[Occurrence(fact.id, slot)] = len(order)
        return cls(
            doc_id=doc_id,
            facts=tuple(facts),
            argument_index=build_argument_index(facts),
            _facts_by_id=by_id,
            _occurrence_order=order,
        )

    def fact(self, fact_id: str) -> Fact:
        try:
            return self._facts_by_id[fact_id]
        except KeyError:
            raise DataError(f"doc {self.doc_id}: unknown fact id {fact_id!r}") from None

    def element_at(self, ref: Occurrence) -> Element:
        fact = self.fact(ref.fact_id)
        if ref.slot == SUBJECT:
            return fact.subject
        if ref.slot.startswith("object:"):
            k = int(ref.slot.split(":", 1)[1])
            if 0 <= k < len(fact.objects):
                return fact.objects[k]
        raise DataError(f"doc {self.doc_id}: unresolved slot {ref.slot!r} in fact {ref.fact_id!r}")

    def position(self, ref: Occurrence) -> int:
        """Document-order ordinal of an argument occurrence."""
        return self._occurrence_order[ref]

    def occurrences(self) -> list[Occurrence]:
        """All argument occurrences in document order."""
        return sorted(self._occurrence_order, key=self._occurrence_order.get)


@dataclass(frozen=True)
class ExternalKB:
    """A named external fact collection in the same triplet schema."""

    name: str
    facts: tuple[Fact, ...]


@dataclass(frozen=True)
class Instance:
    """A question over one document KB with a gold answer occurrence."""

    question_text: str
    question_tokens: tuple[str, ...]
    doc_kb: DocumentKB
    answer: Occurrence

    def answer_element(self) -> Element:
        return self.doc_kb.element_at(self.answer)


def _parse_fact(obj: dict, line: int | None = None) -> Fact:
    try:
        return Fact(
            id=str(obj["id"]),
            subject=make_element(obj["subject"], SUBJECT),
            predicate=make_element(obj["predicate"], PREDICATE),
            objects=tuple(make_element(o, OBJECT) for o in obj["objects"]),
        )
    except KeyError as exc:
        raise DataError(f"fact record missing field {exc}", line) from None


def _parse_instance(obj: dict, line: int) -> Instance:
    for key in ("doc_id", "question", "facts", "answer"):
        if key not in obj:
            raise DataError(f"record missing field {key!r}", line)
    facts = [_parse_fact(f, line) for f in obj["facts"]]
    try:
        kb = DocumentKB.build(str(obj["doc_id"]), facts)
    except DataError as exc:
        raise DataError(str(exc), line) from None
    answer_obj = obj["answer"]
    if not isinstance(answer_obj, dict) or set(answer_obj) < {"fact_id", "slot"}:
        raise DataError("answer must be an object with fact_id and slot", line)
    answer = Occurrence(str(answer_obj["fact_id"]), str(answer_obj["slot"]))
    try:
        kb.element_at(answer)
    except DataError:
        raise DataError(
            f"answer references absent argument {answer.fact_id!r}/{answer.slot!r}",
            line,
        ) from None
    question = str(obj["question"])
    tokens = tuple(tokenize(question))
    if not tokens:
        raise DataError("question has no word tokens", line)
    return Instance(question, tokens, kb, answer)


def load_instances(path: str | Path) -> list[Instance]:
    """Load a JSON-lines dataset file, preserving record order."""
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON ({exc.msg})", lineno) from None
            instances.append(_parse_instance(obj, lineno))
    return instances


def _fact_to_json(fact: Fact) -> dict:
    return {
        "id": fact.id,
        "subject": fact.subject.text,
        "predicate": fact.predicate.text,
        "objects": [o.text for o in fact.objects],
    }


def instance_to_json(instance: Instance) -> dict:
    return {
        "doc_id": instance.doc_kb.doc_id,
        "question": instance.question_text,
        "facts": [_fact_to_json(f) for f in instance.doc_kb.facts],
        "answer": {"fact_id": instance.answer.fact_id, "slot": instance.answer.slot},
    }


def save_instances(instances: list[Instance], path: str | Path) -> None:
    """Write instances in the dataset wire format (one JSON object per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(json.dumps(instance_to_json(instance), sort_keys=True) + "\n")


def load_external_kb(path: str | Path, name: str | None = None) -> ExternalKB:
    """Load an external-KB fixture: one fact JSON object per line."""
    path = Path(path)
    facts = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON ({exc.msg})", lineno) from None
            fact = _parse_fact(obj, lineno)
            if fact.id in seen:
                raise DataError(f"duplicate fact id {fact.id!r}", lineno)
            seen.add(fact.id)
            facts.append(fact)
    return ExternalKB(name=name or path.stem, facts=tuple(facts))


def save_external_kb(kb: ExternalKB, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for fact in kb.facts:
            fh.write(json.dumps(_fact_to_json(fact), sort_keys=True) + "\n")


@dataclass(frozen=True)
class KbStatistics:
    """Corpus-level means over a list of instances."""

    num_instances: int
    avg_facts_per_doc: float
    avg_arguments_per_doc: float
    avg_predicates_per_doc: float
    avg_words_per_argument: float
    avg_words_per_predicate: float
    avg_words_per_question: float


def kb_statistics(instances: list[Instance]) -> KbStatistics:
    """Average fact/argument/word counts across a dataset.

    Argument counts are slot instances (subject plus each object), not
    unique texts.
    """
    if not instances:
        raise DataError("cannot compute statistics of an empty instance list")
    n = len(instances)
    facts = arguments = predicates = 0
    arg_words = pred_words = question_words = 0
    for instance in instances:
        question_words += len(instance.question_tokens)
        for fact in instance.doc_kb.facts:
            facts += 1
            predicates += 1
            pred_words += len(fact.predicate.tokens)
            for _, element in fact.argument_slots():
                arguments += 1
                arg_words += len(element.tokens)
    return KbStatistics(
        num_instances=n,
        avg_facts_per_doc=facts / n,
        avg_arguments_per_doc=arguments / n,
        avg_predicates_per_doc=predicates / n,
        avg_words_per_argument=arg_words / arguments if arguments else 0.0,
        avg_words_per_predicate=pred_words / predicates if predicates else 0.0,
        avg_words_per_question=question_words / n,
    )
