"""External-KB retrieval (TF-IDF inverted index) and representation
enhancement.

Facts from a small external KB are indexed per field (arguments versus
predicates).  Element queries retrieve the top scoring facts, which then
augment the element's vector with averaged neighbor encodings: incoming
facts (element matched the object side) contribute avg(pred, subject),
outgoing facts (subject side) contribute avg(pred, object).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
import math

from .encoding import mean_of
from .kb import Element, ExternalKB, Fact
from .nn import Tensor
from .textops import DEFAULT_STOPWORDS, remove_stopwords

ARGUMENT_FIELD = "argument"
PREDICATE_FIELD = "predicate"
MAX_HITS = 10
ROLE_BOOST = 2.0


def _field_tokens(fact: Fact, field: str) -> list[str]:
    if field == PREDICATE_FIELD:
        return list(fact.predicate.tokens)
    tokens = list(fact.subject.tokens)
    for obj in fact.objects:
        tokens.extend(obj.tokens)
    return tokens


@dataclass(frozen=True)
class RetrievalHit:
    """One retrieved external fact with its relevance score."""

    fact: Fact
    score: float
    matched_field: str  # "subject" or "object": which side the query matched


class FactIndex:
    """Per-field TF-IDF inverted index over an external KB."""

    def __init__(self, kb: ExternalKB, stopwords: frozenset[str] = DEFAULT_STOPWORDS):
        self.kb = kb
        self.stopwords = stopwords
        self.num_facts = len(kb.facts)
        # token -> {fact position -> term frequency}, one map per field
        self.postings: dict[str, dict[str, dict[int, int]]] = {
            ARGUMENT_FIELD: {},
            PREDICATE_FIELD: {},
        }
        for pos, fact in enumerate(kb.facts):
            for field in (ARGUMENT_FIELD, PREDICATE_FIELD):
                counts = Counter(remove_stopwords(_field_tokens(fact, field), stopwords))
                for token, tf in counts.items():
                    self.postings[field].setdefault(token, {})[pos] = tf

    def idf(self, token: str, field: str) -> float:
        df = len(self.postings[field].get(token, {}))
        return math.log((1.0 + self.num_facts) / (1.0 + df)) + 1.0

    def field_score(self, query_tokens: list[str], pos: int, field: str) -> float:
        score = 0.0
        for token in query_tokens:
            tf = self.postings[field].get(token, {}).get(pos, 0)
            if tf:
                score += tf * self.idf(token, field)
        return score

    def _subject_object_scores(self, query_tokens: list[str], fact: Fact) -> tuple[float, float]:
        """Per-side TF-IDF of the query against subject and object tokens."""
        subject = Counter(remove_stopwords(list(fact.subject.tokens), self.stopwords))
        objects = Counter(
            remove_stopwords(
                [t for o in fact.objects for t in o.tokens], self.stopwords
            )
        )
        s_score = sum(
            subject[t] * self.idf(t, ARGUMENT_FIELD) for t in query_tokens if t in subject
        )
        o_score = sum(
            objects[t] * self.idf(t, ARGUMENT_FIELD) for t in query_tokens if t in objects
        )
        return s_score, o_score


def build_index(kb: ExternalKB, stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> FactIndex:
    return FactIndex(kb, stopwords)


def retrieve(query_element: Element, index: FactIndex, role: str) -> list[RetrievalHit]:
    """Top facts for an element query, boosting the role-matching field.

    ``role`` is "argument" or "predicate".  Returns at most MAX_HITS hits,
    score descending, ties broken by fact position.
    """
    if role not in (ARGUMENT_FIELD, PREDICATE_FIELD):
        raise ValueError(f"unknown query role {role!r}")
    query = remove_stopwords(list(query_element.tokens), index.stopwords)
    if not query:
        return []
    totals: dict[int, float] = {}
    for field in (ARGUMENT_FIELD, PREDICATE_FIELD):
        weight = ROLE_BOOST if field == role else 1.0
        for token in set(query):
            for pos, tf in index.postings[field].get(token, {}).items():
                totals[pos] = totals.get(pos, 0.0) + weight * tf * index.idf(token, field)
    ranked = sorted(totals.items(), key=lambda item: (-item[1], item[0]))[:MAX_HITS]
    hits = []
    for pos, score in ranked:
        fact = index.kb.facts[pos]
        s_score, o_score = index._subject_object_scores(query, fact)
        matched = "object" if o_score > s_score else "subject"
        hits.append(RetrievalHit(fact=fact, score=score, matched_field=matched))
    return hits


def filter_hits_for_enhancement(element: Element, hits: list[RetrievalHit],
                                stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[RetrievalHit]:
    """Keep hits sharing at least one non-stop-word token with the element."""
    content = set(remove_stopwords(list(element.tokens), stopwords))
    kept = []
    for hit in hits:
        hit_tokens = set(_field_tokens(hit.fact, ARGUMENT_FIELD))
        hit_tokens.update(_field_tokens(hit.fact, PREDICATE_FIELD))
        if content & hit_tokens:
            kept.append(hit)
    return kept


def _object_mean(fact: Fact, encode) -> Tensor:
    return mean_of([encode(obj) for obj in fact.objects])


def enhance(v_e: Tensor, hits: list[RetrievalHit], encode) -> Tensor:
    """Add averaged neighbor vectors of retrieved facts to an element vector.

    Incoming facts (query matched the object side) contribute the average
    of predicate and subject encodings; outgoing facts contribute the
    average of predicate and object encodings.  No hits leaves the vector
    unchanged.
    """
    out = v_e
    for hit in hits:
        pred = encode(hit.fact.predicate)
        if hit.matched_field == "object":
            other = encode(hit.fact.subject)
        else:
            other = _object_mean(hit.fact, encode)
        out = out + mean_of([pred, other])
    return out


class KbEnhancer:
    """Retrieval-backed element enhancement plugged into the QA models.

    Hit lists are cached per (element text, field kind); encodings of
    external elements are produced by the caller-supplied base encoder so
    gradients flow into the shared parameters.
    """

    def __init__(self, index: FactIndex, stopwords: frozenset[str] = DEFAULT_STOPWORDS):
        self.index = index
        self.stopwords = stopwords
        self._hit_cache: dict[tuple[str, str], list[RetrievalHit]] = {}

    def hits_for(self, element: Element) -> list[RetrievalHit]:
        from .encoding import element_kind

        kind = element_kind(element)
        key = (element.text, kind)
        if key not in self._hit_cache:
            hits = retrieve(element, self.index, kind)
            self._hit_cache[key] = filter_hits_for_enhancement(
                element, hits, self.stopwords
            )
        return self._hit_cache[key]

    def delta(self, element: Element, encode) -> Tensor | None:
        """Summed enhancement contribution, or None when nothing retrieved."""
        hits = self.hits_for(element)
        if not hits:
            return None
        zero = Tensor(0.0)
        return enhance(zero, hits, encode)


def external_kb_token_lists(kb: ExternalKB) -> list[list[str]]:
    """Token lists of all external elements (for vocabulary building)."""
    lists = []
    for fact in kb.facts:
        lists.append(list(fact.subject.tokens))
        lists.append(list(fact.predicate.tokens))
        for obj in fact.objects:
            lists.append(list(obj.tokens))
    return lists
