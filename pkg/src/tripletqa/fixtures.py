"""Synthetic desk-scale datasets: generators for learnable fixtures and
the four miniature external KBs.

Every generator is deterministic in its seed.  Word pools guarantee
pairwise edit distance >= 2, so fuzzy anchor matching stays precise.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .kb import (
    OBJECT,
    PREDICATE,
    SUBJECT,
    DocumentKB,
    ExternalKB,
    Fact,
    Instance,
    Occurrence,
    make_element,
    save_external_kb,
    save_instances,
)
from .paraphrase import generate_synthetic_corpus, save_corpus
from .training import path_candidates
from .worldgen import CANONICAL, VARIANT, Meaning, QuestionWorld, WordPool


def _fact(fid: str, subject: str, predicate: str, objects) -> Fact:
    if isinstance(objects, str):
        objects = [objects]
    return Fact(
        id=fid,
        subject=make_element(subject, SUBJECT),
        predicate=make_element(predicate, PREDICATE),
        objects=tuple(make_element(o, OBJECT) for o in objects),
    )


def _instance(doc_id: str, question_tokens: list[str], triples, answer_index: int,
              answer_slot: str = "object:0") -> Instance:
    facts = [_fact(f"f{i}", s, p, o) for i, (s, p, o) in enumerate(triples)]
    kb = DocumentKB.build(doc_id, facts)
    return Instance(
        question_text=" ".join(question_tokens),
        question_tokens=tuple(question_tokens),
        doc_kb=kb,
        answer=Occurrence(f"f{answer_index}", answer_slot),
    )


# -- separable fixture ---------------------------------------------------------


def separable_dataset(
    n_train: int, n_dev: int, seed: int, n_facts: int = 4,
    world: QuestionWorld | None = None,
) -> tuple[list[Instance], list[Instance]]:
    """Star-shaped documents where the answer token appears in the question.

    Each document has one subject with ``n_facts`` distinct relations and
    objects; the question names the subject, the gold relation and the
    gold object, so ranking the gold object first is learnable from
    lexical evidence alone.
    """
    world = world or QuestionWorld()
    rng = np.random.default_rng([seed, 10])

    def generate(n: int, tag: str) -> list[Instance]:
        instances = []
        for i in range(n):
            subject = world.subjects[int(rng.integers(len(world.subjects)))]
            rel_idx = rng.choice(len(world.relations), size=n_facts, replace=False)
            obj_idx = rng.choice(len(world.objects), size=n_facts, replace=False)
            gold = int(rng.integers(n_facts))
            triples = []
            for k in range(n_facts):
                triples.append(
                    (
                        " ".join(subject),
                        " ".join(world.relations[rel_idx[k]]),
                        world.objects[obj_idx[k]],
                    )
                )
            meaning = Meaning(
                subject=subject,
                relation=world.relations[rel_idx[gold]],
                obj=world.objects[obj_idx[gold]],
            )
            question = world.render(meaning, CANONICAL)
            instances.append(_instance(f"{tag}{i}", question, triples, gold))
        return instances

    return generate(n_train, "septrain"), generate(n_dev, "sepdev")


# -- chain (two-hop) fixture --------------------------------------------------------


class WordPoolSeed:
    CHAIN = 101
    EXTERNAL = 202
    LOCATION = 303


class _ChainWorld:
    def __init__(self):
        rng = np.random.default_rng([WordPoolSeed.CHAIN, 0])
        pool = WordPool(rng)
        self.entities = pool.batch(18)
        self.relations = pool.batch(6)


_CHAIN_WORLD: _ChainWorld | None = None


def _chain_world() -> _ChainWorld:
    global _CHAIN_WORLD
    if _CHAIN_WORLD is None:
        _CHAIN_WORLD = _ChainWorld()
    return _CHAIN_WORLD


def chain_dataset(n_train: int, n_dev: int, seed: int) -> tuple[list[Instance], list[Instance]]:
    """Documents whose questions require composing two facts.

    Each document holds two parallel chains (a -p-> b -r-> c) and
    (a' -p-> b' -r-> c'); the question names a, p and r, so telling c from
    c' requires resolving the intermediate b first.
    """
    world = _chain_world()
    rng = np.random.default_rng([seed, 11])

    def generate(n: int, tag: str) -> list[Instance]:
        instances = []
        for i in range(n):
            ents = [world.entities[j] for j in rng.choice(len(world.entities), 6, replace=False)]
            a, a2, b, b2, c, c2 = ents
            rels = [world.relations[j] for j in rng.choice(len(world.relations), 2, replace=False)]
            p, r = rels
            facts = [(a, p, b), (a2, p, b2), (b, r, c), (b2, r, c2)]
            order = list(rng.permutation(4))
            triples = [facts[j] for j in order]
            gold = order.index(2)  # position of (b, r, c)
            question = ["which", p, r, a]
            instances.append(_instance(f"{tag}{i}", question, triples, gold))
        return instances

    return generate(n_train, "chaintrain"), generate(n_dev, "chaindev")


# -- external-KB dependence fixture ---------------------------------------------------


def external_dataset(
    n_train: int, n_dev: int, seed: int
) -> tuple[list[Instance], list[Instance], ExternalKB]:
    """Questions only answerable through external-KB enhancement.

    Each document lists two never-reused part entities; the question asks
    for the part with a given property, and only the external KB links
    parts to properties.  Without enhancement the two parts are
    indistinguishable, so accuracy sits near chance.
    """
    rng = np.random.default_rng([seed, 12])
    pool_rng = np.random.default_rng([WordPoolSeed.EXTERNAL, 0])
    pool = WordPool(pool_rng)
    subjects = pool.batch(12)
    properties = pool.batch(8)
    external_facts: list[Fact] = []

    def generate(n: int, tag: str) -> list[Instance]:
        instances = []
        for i in range(n):
            x = subjects[int(rng.integers(len(subjects)))]
            parts = [pool.fresh(), pool.fresh()]
            prop_idx = rng.choice(len(properties), size=2, replace=False)
            props = [properties[j] for j in prop_idx]
            asked = int(rng.integers(2))
            listed = list(rng.permutation(2))
            triples = [(x, "contains", parts[listed[0]]), (x, "contains", parts[listed[1]])]
            gold = listed.index(asked)
            question = ["which", "part", x, props[asked]]
            for part, prop in zip(parts, props):
                external_facts.append(_fact(f"e{len(external_facts)}", part, "is", prop))
            instances.append(_instance(f"{tag}{i}", question, triples, gold))
        return instances

    train = generate(n_train, "exttrain")
    dev = generate(n_dev, "extdev")
    return train, dev, ExternalKB(name="parts", facts=tuple(external_facts))


# -- fusion fixture ----------------------------------------------------------------


def fusion_dataset(
    n_train: int, n_dev: int, seed: int, world: QuestionWorld | None = None
) -> tuple[list[Instance], list[Instance]]:
    """Separable documents asked through two question templates.

    Canonical-form questions favor the matching model; variant-form
    questions lean on the generation/paraphrase route, giving the two
    scorers different error profiles on an undertrained budget.
    """
    world = world or QuestionWorld()
    rng = np.random.default_rng([seed, 13])

    def generate(n: int, tag: str) -> list[Instance]:
        instances = []
        for i in range(n):
            subject = world.subjects[int(rng.integers(len(world.subjects)))]
            rel_idx = rng.choice(len(world.relations), size=3, replace=False)
            obj_idx = rng.choice(len(world.objects), size=3, replace=False)
            gold = int(rng.integers(3))
            triples = [
                (
                    " ".join(subject),
                    " ".join(world.relations[rel_idx[k]]),
                    world.objects[obj_idx[k]],
                )
                for k in range(3)
            ]
            meaning = Meaning(
                subject=subject,
                relation=world.relations[rel_idx[gold]],
                obj=world.objects[obj_idx[gold]],
            )
            form = CANONICAL if rng.integers(2) == 0 else VARIANT
            question = world.render(meaning, form)
            instances.append(_instance(f"{tag}{i}", question, triples, gold))
        return instances

    return generate(n_train, "fusetrain"), generate(n_dev, "fusedev")


# -- location fixture (attention-inspection flavor) ---------------------------------------


def location_dataset(n_train: int, seed: int) -> tuple[list[Instance], Instance]:
    """Where-is documents plus a fixed city/county inspection instance."""
    rng = np.random.default_rng([seed, 14])
    pool_rng = np.random.default_rng([WordPoolSeed.LOCATION, 0])
    pool = WordPool(pool_rng)
    cities = [(pool.fresh(), pool.fresh()) for _ in range(14)]
    counties = pool.batch(14)

    instances = []
    for i in range(n_train):
        city = cities[int(rng.integers(len(cities)))]
        county = counties[int(rng.integers(len(counties)))]
        triples = [
            (" ".join(city), "is located", f"in {county} county"),
            (" ".join(city), "is", "a city"),
        ]
        question = ["where", "is", *city, "located"]
        instances.append(_instance(f"loc{i}", question, triples, 0))

    replica = _instance(
        "locprobe",
        ["where", "is", "st", "johns", "mi", "located"],
        [
            ("st. johns", "is located", "in clinton county"),
            ("st. johns", "is", "a city"),
        ],
        0,
    )
    return instances, replica


# -- question generation pairs -------------------------------------------------------------


def qg_pairs_from_instances(instances: list[Instance], max_hops: int = 2):
    """(gold path, question) pairs for instances whose answer is reachable."""
    pairs = []
    for instance in instances:
        for candidate in path_candidates(instance, max_hops):
            if candidate.occurrence == instance.answer:
                pairs.append((candidate.path, list(instance.question_tokens)))
                break
    return pairs


# -- miniature external KBs ------------------------------------------------------------------


def mini_external_kbs() -> dict[str, ExternalKB]:
    """Four fixed external-KB fixtures in the triplet schema."""
    nell = [
        ("amino acids", "is", "protein"),
        ("protein", "is", "a molecule"),
        ("dna", "is", "a molecule"),
        ("ribosome", "builds", "protein"),
        ("enzyme", "is", "protein"),
        ("clinton county", "is located in", "michigan"),
    ]
    probase = [
        ("apple", "is a", "fruit"),
        ("banana", "is a", "fruit"),
        ("fruit", "is a", "food"),
        ("salmon", "is a", "fish"),
        ("fish", "is a", "animal"),
        ("oak", "is a", "tree"),
    ]
    freebase = [
        ("st. johns", "located in", "clinton county"),
        ("clinton county", "located in", "michigan"),
        ("michigan", "located in", "united states"),
        ("detroit", "located in", "michigan"),
        ("lansing", "capital of", "michigan"),
    ]
    reverb = [
        ("water", "boils at", "100 degrees"),
        ("the sun", "rises in", "the east"),
        ("bees", "make", "honey"),
        ("rain", "falls from", "clouds"),
        ("rivers", "flow into", "the sea"),
    ]
    out = {}
    for name, rows in (
        ("nell-mini", nell),
        ("probase-mini", probase),
        ("freebase-mini", freebase),
        ("reverb-mini", reverb),
    ):
        facts = tuple(_fact(f"{name[:2]}{i}", s, p, o) for i, (s, p, o) in enumerate(rows))
        out[name] = ExternalKB(name=name, facts=facts)
    return out


KB_SLOTS = ("freebase-mini", "probase-mini", "nell-mini", "reverb-mini")


# -- fixture suite on disk ------------------------------------------------------------------


def write_fixture_suite(out_dir: str | Path, seed: int = 0,
                        sizes: dict | None = None) -> dict:
    """Generate and save the full fixture suite; returns written paths."""
    sizes = sizes or {}
    out_dir = Path(out_dir)
    kb_dir = out_dir / "kb"
    kb_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    def save_split(name: str, train, dev):
        train_path = out_dir / f"{name}_train.jsonl"
        dev_path = out_dir / f"{name}_dev.jsonl"
        save_instances(train, train_path)
        save_instances(dev, dev_path)
        written[f"{name}_train"] = str(train_path)
        written[f"{name}_dev"] = str(dev_path)

    train, dev = separable_dataset(
        sizes.get("separable_train", 500), sizes.get("separable_dev", 100), seed
    )
    save_split("separable", train, dev)

    train, dev = chain_dataset(
        sizes.get("chain_train", 300), sizes.get("chain_dev", 100), seed
    )
    save_split("chain", train, dev)

    train, dev, parts_kb = external_dataset(
        sizes.get("external_train", 300), sizes.get("external_dev", 100), seed
    )
    save_split("external", train, dev)

    train, dev = fusion_dataset(
        sizes.get("fusion_train", 300), sizes.get("fusion_dev", 100), seed
    )
    save_split("fusion", train, dev)

    kbs = mini_external_kbs()
    # the parts facts ride along in nell-mini so --kb nell-mini pairs with
    # the external fixture dataset out of the box
    kbs["nell-mini"] = ExternalKB(
        name="nell-mini", facts=kbs["nell-mini"].facts + parts_kb.facts
    )
    for name, kb in kbs.items():
        path = kb_dir / f"{name}.jsonl"
        save_external_kb(kb, path)
        written[name] = str(path)

    corpus = generate_synthetic_corpus(seed, sizes.get("paraphrase_pairs", 400))
    corpus_path = out_dir / "paraphrase_corpus.tsv"
    save_corpus(corpus, corpus_path)
    written["paraphrase_corpus"] = str(corpus_path)
    return written
