"""Structured words, the d-bar density, and readability certificates."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from circsys.words import (Concat, Literal, Power, WordIndexError,
                           count_pair_occurrences, dbar, reverse,
                           structural_equal, unique_readability, word,
                           word_from_json, word_to_json)

texts = st.text(alphabet="01be", min_size=1, max_size=40)


def build_tree(text, depth=2):
    """A random structural word materializing to text repeated 2^depth."""
    w = Literal(text)
    for _ in range(depth):
        w = Power(w, 2) if len(text) % 2 else Concat((w, w))
    return w


class TestExtraction:
    @given(texts, st.integers(0, 3))
    @settings(max_examples=60, deadline=None)
    def test_extract_matches_flat_string(self, text, depth):
        w = build_tree(text, depth)
        flat = text * (2 ** depth)
        assert w.length == len(flat)
        assert w.materialize() == flat
        n = len(flat)
        for a, b in [(0, n), (n // 3, 2 * n // 3 + 1), (n - 1, n)]:
            assert w.extract(a, b) == flat[a:b]

    def test_power_without_materializing(self):
        # 2^40 symbols: only window access is feasible
        w = Power(Literal("01"), 2 ** 39)
        assert w.length == 2 ** 40
        assert w.materialize() is None
        assert w.extract(2 ** 39, 2 ** 39 + 4) == "0101"

    def test_out_of_range(self):
        with pytest.raises(WordIndexError):
            word("abc").symbol_at(3)


class TestReverse:
    @given(texts)
    @settings(max_examples=40, deadline=None)
    def test_reverse_matches_slice(self, text):
        assert reverse(word(text)).materialize() == text[::-1]

    @given(texts)
    @settings(max_examples=40, deadline=None)
    def test_involution(self, text):
        w = build_tree(text, 2)
        assert reverse(reverse(w)).materialize() == w.materialize()

    def test_structural_equal_sees_through_shape(self):
        a = Concat((Literal("01"), Literal("01")))
        assert structural_equal(a, Power(Literal("01"), 2))
        assert structural_equal(a, Literal("0101"))
        assert not structural_equal(a, Literal("0110"))


class TestDbar:
    def test_exact_small(self):
        r = dbar(word("10011"), word("10101"))
        assert r.kind == "exact"
        assert r.value == Fraction(2, 5)

    def test_identical_words_zero(self):
        w = build_tree("0110", 3)
        r = dbar(w, w)
        assert r.value == 0

    @given(st.text(alphabet="01", min_size=1, max_size=30),
           st.text(alphabet="01", min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_matches_counting_oracle(self, a, b):
        n = min(len(a), len(b))
        r = dbar(word(a), word(b), (0, n))
        assert r.value == Fraction(sum(x != y for x, y in zip(a, b)), n)

    def test_triangle_inequality(self):
        rng = random.Random(5)
        for _ in range(25):
            u, v, w = ("".join(rng.choice("01") for _ in range(40))
                       for _ in range(3))
            duv = dbar(word(u), word(v)).value
            dvw = dbar(word(v), word(w)).value
            duw = dbar(word(u), word(w)).value
            assert duw <= duv + dvw

    def test_estimate_brackets_truth(self):
        rng = random.Random(7)
        a = "".join(rng.choice("01") for _ in range(5000))
        b = "".join(rng.choice("01") for _ in range(5000))
        truth = dbar(word(a), word(b), mode="exact").value
        est = dbar(word(a), word(b), mode="estimate", seed=3, samples=2048)
        assert est.kind == "estimate"
        assert abs(est.value - truth) <= est.half_width

    def test_empty_interval_rejected(self):
        with pytest.raises(ValueError):
            dbar(word("01"), word("01"), (1, 1))

    def test_interval_outside_domain(self):
        with pytest.raises(WordIndexError):
            dbar(word("01"), word("0"), (0, 2))


class TestPairOccurrences:
    def test_counts_against_scan(self):
        rng = random.Random(11)
        u = word("".join(rng.choice("01") for _ in range(64)))
        v = word("".join(rng.choice("01") for _ in range(64)))
        grid = 4
        for shift in (0, 4, -8):
            for up in ("0101", "1100"):
                for vp in ("0011", "0101"):
                    got = count_pair_occurrences(word(up), word(vp), u, v,
                                                 shift, grid)
                    ut, vt = u.materialize(), v.materialize()
                    want = sum(
                        1 for t in range(0, len(vt) - grid + 1, grid)
                        if 0 <= shift + t and shift + t + grid <= len(ut)
                        and ut[shift + t:shift + t + grid] == up
                        and vt[t:t + grid] == vp)
                    assert got == want

    def test_misaligned_shift_rejected(self):
        with pytest.raises(ValueError):
            count_pair_occurrences(word("01"), word("01"),
                                   word("0101"), word("0101"), 1, 2)


class TestReadability:
    def test_prefix_code_readable(self):
        cert = unique_readability(["10", "110", "1110"])
        assert cert.readable

    def test_ambiguous_family_witnessed(self):
        cert = unique_readability(["01", "0101"])
        assert not cert.readable
        assert cert.second_parse is not None
        u, v = cert.counterexample[:2]
        assert u in ("01", "0101") and v in ("01", "0101")

    def test_probe_parse_positions(self):
        cert = unique_readability(["10", "110"], probe=word("b10e110"))
        assert cert.readable
        starts = [pos for pos, _ in cert.parse]
        assert starts == [1, 4]


class TestSerialization:
    @given(texts, st.integers(0, 2))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_preserves_structure(self, text, depth):
        w = build_tree(text, depth)
        again = word_from_json(word_to_json(w))
        assert structural_equal(w, again)
        assert again.materialize() == w.materialize()
