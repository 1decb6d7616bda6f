import numpy as np
import pytest

from helpers import bfs_candidate_oracle, make_instance, make_kb, random_kb
from tripletqa.candidates import (
    coverage_report,
    detect_anchors,
    enumerate_candidates,
)
from tripletqa.errors import DataError
from tripletqa.kb import Occurrence
from tripletqa.textops import fuzzy_indicator, tokenize


def question(text):
    return tuple(tokenize(text))


def anchor_for(kb, text):
    from tripletqa.candidates import AnchorMatch

    return AnchorMatch(text, kb.argument_index[text][0], score=1)


class TestDetectAnchors:
    def test_st_johns_scores_at_least_two(self):
        kb = make_kb(
            [
                ("st. johns", "is located", "in clinton county"),
                ("clinton county", "is in", "michigan"),
            ]
        )
        anchors = detect_anchors(question("Where is st johns mi located?"), kb)
        by_text = {a.text: a for a in anchors}
        assert by_text["st johns"].score >= 2
        assert anchors[0].text == "st johns"  # highest score first

    def test_no_shared_tokens(self):
        kb = make_kb([("zzzz", "qqqq", "xxxx")])
        assert detect_anchors(question("completely unrelated words"), kb) == []

    def test_scores_match_brute_force_double_loop(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            kb = random_kb(rng)
            q = tuple(f"e{rng.integers(8)}" for _ in range(5))
            anchors = {a.text: a.score for a in detect_anchors(q, kb)}
            for text in kb.argument_index:
                expected = 0
                for arg_word in text.split():
                    for q_word in q:
                        expected += fuzzy_indicator(arg_word, q_word)
                if expected >= 1:
                    assert anchors[text] == expected
                else:
                    assert text not in anchors

    def test_sorted_by_score_then_position(self):
        kb = make_kb([("bb cc", "p", "dd"), ("aa", "p", "bb cc")])
        anchors = detect_anchors(("aa", "bb", "cc"), kb)
        assert [a.text for a in anchors] == ["bb cc", "aa"]
        assert anchors[0].occurrence == Occurrence("f0", "subject")


class TestEnumerateCandidates:
    def test_single_fact_one_hop(self):
        kb = make_kb([("a", "p", "b")])
        paths = enumerate_candidates([anchor_for(kb, "a")], kb, max_hops=1)
        assert [p.terminal for p in paths] == [Occurrence("f0", "object:0")]
        assert paths[0].hops == 1
        assert [el.text for el in paths[0].elements] == ["a", "p", "b"]

    def test_two_hop_chain(self):
        kb = make_kb([("a", "p", "b"), ("b", "r", "c")])
        paths = enumerate_candidates([anchor_for(kb, "a")], kb, max_hops=2)
        reached = {p.terminal: p.hops for p in paths}
        assert reached == {
            Occurrence("f0", "object:0"): 1,  # b
            Occurrence("f1", "object:0"): 2,  # c
        }
        two_hop = [p for p in paths if p.hops == 2][0]
        assert [el.text for el in two_hop.elements] == ["a", "p", "b", "r", "c"]

    def test_empty_anchors(self):
        kb = make_kb([("a", "p", "b")])
        assert enumerate_candidates([], kb) == []

    def test_invalid_max_hops(self):
        kb = make_kb([("a", "p", "b")])
        with pytest.raises(DataError):
            enumerate_candidates([], kb, max_hops=3)

    def test_matches_bfs_oracle_on_random_graphs(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            kb = random_kb(rng, max_facts=8)
            q = tuple(f"e{rng.integers(8)}" for _ in range(3))
            anchors = detect_anchors(q, kb)
            for max_hops in (1, 2):
                paths = enumerate_candidates(anchors, kb, max_hops=max_hops)
                got = {p.terminal: p.hops for p in paths}
                expected = bfs_candidate_oracle(
                    kb, [a.text for a in anchors], max_hops
                )
                assert got == expected

    def test_two_hop_superset_of_one_hop(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            kb = random_kb(rng)
            anchors = detect_anchors(tuple(f"e{rng.integers(8)}" for _ in range(4)), kb)
            one = {p.terminal for p in enumerate_candidates(anchors, kb, 1)}
            two = {p.terminal for p in enumerate_candidates(anchors, kb, 2)}
            assert one <= two

    def test_paths_validate_invariants(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            kb = random_kb(rng)
            anchors = detect_anchors(tuple(f"e{rng.integers(8)}" for _ in range(4)), kb)
            for path in enumerate_candidates(anchors, kb, 2):
                path.validate(kb)

    def test_deterministic_order(self):
        rng = np.random.default_rng(31)
        kb = random_kb(rng)
        anchors = detect_anchors(("e0", "e1", "e2"), kb)
        first = enumerate_candidates(anchors, kb, 2)
        second = enumerate_candidates(anchors, kb, 2)
        assert first == second


class TestCoverage:
    def test_all_answers_one_hop(self):
        instances = [
            make_instance("who likes b", [("b", "likes", "c")], ("f0", "object:0")),
            make_instance("what is d", [("d", "is", "e")], ("f0", "object:0")),
        ]
        report = coverage_report(instances)
        assert report.coverage_1hop == 1.0
        assert report.coverage_2hop == 1.0

    def test_empty_errors(self):
        with pytest.raises(DataError):
            coverage_report([])

    def test_matches_per_instance_oracle(self):
        rng = np.random.default_rng(41)
        instances = []
        for i in range(30):
            kb = random_kb(rng, doc_id=f"d{i}")
            occs = kb.occurrences()
            answer = occs[int(rng.integers(len(occs)))]
            q = " ".join(f"e{rng.integers(8)}" for _ in range(4))
            instances.append(
                make_instance(
                    q,
                    [
                        (f.subject.text, f.predicate.text, [o.text for o in f.objects])
                        for f in kb.facts
                    ],
                    (answer.fact_id, answer.slot),
                    doc_id=f"d{i}",
                )
            )
        report = coverage_report(instances)
        hits1 = hits2 = 0
        for inst in instances:
            anchors = detect_anchors(inst.question_tokens, inst.doc_kb)
            reached = bfs_candidate_oracle(
                inst.doc_kb, [a.text for a in anchors], 2
            )
            if reached.get(inst.answer) == 1:
                hits1 += 1
            if inst.answer in reached:
                hits2 += 1
        assert report.coverage_1hop == pytest.approx(hits1 / 30)
        assert report.coverage_2hop == pytest.approx(hits2 / 30)
        assert report.coverage_2hop >= report.coverage_1hop

    def test_summary_line(self):
        instances = [
            make_instance("who likes b", [("b", "likes", "c")], ("f0", "object:0"))
        ]
        line = coverage_report(instances).summary()
        assert "1-hop" in line and "2-hop" in line and "\n" not in line
