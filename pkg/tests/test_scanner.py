import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mboe import _scan_py
from mboe.scanner import COMPILED_KERNEL, Automaton, kernel_name, naive_scan

try:
    from mboe import _scan_cy
except ImportError:
    _scan_cy = None


def test_kernel_name_consistent():
    assert kernel_name() in ("compiled", "pure-python")
    assert COMPILED_KERNEL == (kernel_name() == "compiled")


class TestAutomaton:
    def test_single_pattern(self):
        auto = Automaton(["ab"])
        assert auto.scan("abab") == [(0, 2, 0), (2, 4, 0)]

    def test_overlapping_and_nested(self):
        auto = Automaton(["aa", "aaa"])
        assert auto.scan("aaaa") == [
            (0, 2, 0),
            (0, 3, 1),
            (1, 3, 0),
            (1, 4, 1),
            (2, 4, 0),
        ]

    def test_suffix_pattern_found_inside_longer(self):
        auto = Automaton(["apple", "le"])
        matches = auto.scan("apple")
        assert (0, 5, 0) in matches
        assert (3, 5, 1) in matches

    def test_empty_text(self):
        assert Automaton(["x"]).scan("") == []

    def test_empty_pattern_rejected(self):
        with pytest.raises(ValueError):
            Automaton(["ok", ""])

    def test_unicode_patterns(self):
        auto = Automaton(["東京", "京都"])
        assert auto.scan("東京都 and 京都") == [(0, 2, 0), (1, 3, 1), (8, 10, 1)]


PATTERN_ALPHABET = "abc東京х "


@given(
    patterns=st.lists(
        st.text(alphabet=PATTERN_ALPHABET, min_size=1, max_size=4),
        min_size=1,
        max_size=12,
        unique=True,
    ),
    text=st.text(alphabet=PATTERN_ALPHABET, max_size=60),
)
@settings(max_examples=300, deadline=None)
def test_automaton_equals_naive(patterns, text):
    assert Automaton(patterns).scan(text) == naive_scan(patterns, text)


@pytest.mark.skipif(_scan_cy is None, reason="compiled kernel not built")
@given(
    patterns=st.lists(
        st.text(alphabet=PATTERN_ALPHABET, min_size=1, max_size=4),
        min_size=1,
        max_size=12,
        unique=True,
    ),
    text=st.text(alphabet=PATTERN_ALPHABET, max_size=60),
)
@settings(max_examples=200, deadline=None)
def test_kernels_agree(patterns, text):
    compiled = Automaton(patterns, kernel=_scan_cy).scan(text)
    pure = Automaton(patterns, kernel=_scan_py).scan(text)
    assert compiled == pure


@pytest.mark.skipif(_scan_cy is None, reason="compiled kernel not built")
def test_kernels_agree_on_larger_corpus():
    rng = np.random.default_rng(0)
    alphabet = list("abcdef xyz")
    patterns = list(
        {
            "".join(rng.choice(alphabet, size=rng.integers(1, 5)))
            for _ in range(60)
        }
    )
    text = "".join(rng.choice(alphabet, size=5000))
    compiled = Automaton(patterns, kernel=_scan_cy)
    pure = Automaton(patterns, kernel=_scan_py)
    assert compiled.scan(text) == pure.scan(text)
