import math

import jellyfish
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poplink.comparators import (
    ComparatorSpec,
    compare,
    edit_distance,
    exact_sim,
    jaro_sim,
    jaro_winkler_sim,
    levenshtein_sim,
    year_diff_sim,
)
from poplink.validation import ConfigError

from comparator_cases import CASES

REAL = {
    "levenshtein": levenshtein_sim,
    "jaro": jaro_sim,
    "jaro_winkler": jaro_winkler_sim,
    "year_diff": lambda a, b: year_diff_sim(int(a), int(b), 10),
}

words = st.text(alphabet="abcdehilmnorst", max_size=12)


@pytest.mark.parametrize("kind,a,b,expected", [c for c in CASES if c[0] in REAL])
def test_fixture_table(kind, a, b, expected):
    assert REAL[kind](a, b) == pytest.approx(expected, abs=1e-6)


def test_worked_examples():
    assert levenshtein_sim("kitten", "sitting") == pytest.approx(1 - 3 / 7)
    assert jaro_winkler_sim("MARTHA", "MARHTA") == pytest.approx(0.9611, abs=1e-4)
    assert year_diff_sim(1871, 1874, 10) == pytest.approx(0.7)


@settings(max_examples=300, deadline=None)
@given(words, words)
def test_against_jellyfish(a, b):
    longest = max(len(a), len(b))
    expected = 1.0 if longest == 0 else 1 - jellyfish.levenshtein_distance(a, b) / longest
    assert levenshtein_sim(a, b) == pytest.approx(expected, abs=1e-12)
    if a and b:
        assert jaro_sim(a, b) == pytest.approx(jellyfish.jaro_similarity(a, b), abs=1e-12)
        assert jaro_winkler_sim(a, b) == pytest.approx(jellyfish.jaro_winkler_similarity(a, b), abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(words, words)
def test_similarity_properties(a, b):
    for f in (levenshtein_sim, jaro_sim, jaro_winkler_sim):
        s = f(a, b)
        assert 0.0 <= s <= 1.0
        assert s == pytest.approx(f(b, a), abs=1e-12)
        assert f(a, a) == 1.0
    assert jaro_winkler_sim(a, b) >= jaro_sim(a, b) - 1e-12


@settings(max_examples=200, deadline=None)
@given(words, words, words)
def test_edit_distance_triangle(a, b, c):
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


def test_winkler_boost_only_above_threshold():
    # jaro of these is below 0.7, so the shared prefix earns nothing
    assert jaro_sim("abcxyzq", "abdmnop") <= 0.7
    assert jaro_winkler_sim("abcxyzq", "abdmnop") == jaro_sim("abcxyzq", "abdmnop")
    assert jaro_winkler_sim("abcxyzq", "abdmnop", boost_threshold=0.0) > jaro_sim("abcxyzq", "abdmnop")


def test_year_diff_bounds():
    assert year_diff_sim(1850, 1870, 10) == 0.0
    with pytest.raises(ConfigError):
        year_diff_sim(1850, 1851, 0)


def test_exact_is_case_insensitive():
    assert exact_sim("M", "m") == 1.0
    assert exact_sim("m", "f") == 0.0


def test_spec_validation_and_missing_values():
    with pytest.raises(ConfigError):
        ComparatorSpec("cosine")
    with pytest.raises(ConfigError):
        ComparatorSpec("levenshtein", {"q": 2})
    with pytest.raises(ConfigError):
        ComparatorSpec("jaro_winkler", {"prefix_weight": 0.3})
    with pytest.raises(ConfigError):
        ComparatorSpec("year_diff", {"d_max": 0})
    spec = ComparatorSpec("year_diff", {"d_max": 5})
    assert compare(spec, None, "1870") is None
    assert compare(spec, "1870", "1872") == pytest.approx(0.6)
    assert compare(spec, "n/a", "1872") == 0.0
    assert math.isclose(compare(ComparatorSpec("jaro_winkler"), "john", "jon"), 0.9333333333333333)
