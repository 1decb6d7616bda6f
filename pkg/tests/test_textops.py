import pytest
from hypothesis import given
from hypothesis import strategies as st

from tripletqa.textops import (
    DEFAULT_STOPWORDS,
    edit_distance,
    fuzzy_indicator,
    load_stopwords,
    remove_stopwords,
    tokenize,
)

tokens_st = st.text(alphabet="abcdef", min_size=0, max_size=6)


def reference_edit_distance(a: str, b: str) -> int:
    """Textbook full-matrix Levenshtein, kept independent of the library."""
    rows, cols = len(a) + 1, len(b) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        dist[i][0] = i
    for j in range(cols):
        dist[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(
                dist[i - 1][j] + 1, dist[i][j - 1] + 1, dist[i - 1][j - 1] + cost
            )
    return dist[-1][-1]


class TestTokenize:
    def test_punctuation_boundaries(self):
        assert tokenize("St. Johns, MI") == ["st", "johns", "mi"]

    def test_empty(self):
        assert tokenize("") == []

    def test_question(self):
        assert tokenize("Where is st johns mi located?") == [
            "where", "is", "st", "johns", "mi", "located",
        ]

    def test_hyphen_is_boundary(self):
        assert tokenize("solar-powered toilet") == ["solar", "powered", "toilet"]

    def test_numbers_kept(self):
        assert tokenize("$ 61,300") == ["61", "300"]

    @given(st.text(max_size=30))
    def test_no_empty_tokens(self, text):
        assert all(t for t in tokenize(text))


class TestEditDistance:
    def test_identical(self):
        assert edit_distance("cat", "cat") == 0

    def test_single_insertion(self):
        assert edit_distance("john", "johns") == 1

    def test_empty_sides(self):
        assert edit_distance("", "abc") == 3
        assert edit_distance("abc", "") == 3

    @given(tokens_st, tokens_st)
    def test_matches_reference_dp(self, x, y):
        assert edit_distance(x, y) == reference_edit_distance(x, y)

    @given(tokens_st, tokens_st)
    def test_symmetry(self, x, y):
        assert edit_distance(x, y) == edit_distance(y, x)

    @given(tokens_st, tokens_st)
    def test_identity_of_indiscernibles(self, x, y):
        assert (edit_distance(x, y) == 0) == (x == y)

    @given(tokens_st, tokens_st, tokens_st)
    def test_triangle_inequality(self, x, y, z):
        assert edit_distance(x, z) <= edit_distance(x, y) + edit_distance(y, z)


class TestFuzzyIndicator:
    def test_exact(self):
        assert fuzzy_indicator("located", "located") == 1

    def test_distance_two(self):
        assert fuzzy_indicator("mi", "in") == 0

    def test_distance_one(self):
        assert fuzzy_indicator("johns", "john") == 1

    @given(tokens_st)
    def test_reflexive(self, x):
        assert fuzzy_indicator(x, x) == 1

    @given(tokens_st, tokens_st)
    def test_agrees_with_distance(self, x, y):
        assert fuzzy_indicator(x, y) == (1 if reference_edit_distance(x, y) <= 1 else 0)


class TestStopwords:
    def test_example(self):
        assert remove_stopwords(["the", "sequence", "of", "amino", "acids"]) == [
            "sequence", "amino", "acids",
        ]

    def test_empty(self):
        assert remove_stopwords([]) == []

    def test_all_stopwords(self):
        assert remove_stopwords(["the", "of", "is"]) == []

    def test_list_size(self):
        assert 40 <= len(DEFAULT_STOPWORDS) <= 70

    def test_override_file(self, tmp_path):
        path = tmp_path / "stop.txt"
        path.write_text("foo\nBar\n\n")
        words = load_stopwords(path)
        assert words == frozenset({"foo", "bar"})
        assert remove_stopwords(["foo", "the"], words) == ["the"]
