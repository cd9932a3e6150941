"""Tests for finite reward distributions and their combinators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaplan.dists import (
    MERGE_TOL,
    SUPPORT_CAP,
    Dist,
    SupportCapExceeded,
    add_dists,
    discretize_normal,
    dists_close,
    make_dist,
    max_dists,
    mix_dists,
    point,
)


# A compact strategy for well-formed small dists: integer atoms, probabilities
# on a 1/8 grid so sums are exact in binary floating point.
@st.composite
def small_dists(draw, max_atoms=4):
    k = draw(st.integers(1, max_atoms))
    values = draw(st.lists(st.integers(-50, 50), min_size=k, max_size=k,
                           unique=True))
    weights = draw(st.lists(st.integers(1, 8), min_size=k, max_size=k))
    total = sum(weights)
    return make_dist([float(v) for v in values],
                     [w / total for w in weights])


def brute_pairs(d):
    return list(zip(d.support.tolist(), d.probs.tolist()))


class TestConstruction:
    def test_sorts_and_normalizes(self):
        d = make_dist([3.0, -1.0, 2.0], [0.2, 0.5, 0.3])
        assert d.support.tolist() == [-1.0, 2.0, 3.0]
        assert d.probs.tolist() == [0.5, 0.3, 0.2]

    def test_merges_near_duplicate_atoms(self):
        d = make_dist([1.0, 1.0 + MERGE_TOL / 10, 2.0], [0.25, 0.25, 0.5])
        assert len(d) == 2
        assert d.probs[0] == pytest.approx(0.5)

    def test_drops_zero_probability_atoms(self):
        d = make_dist([1.0, 2.0, 3.0], [0.5, 0.0, 0.5])
        assert d.support.tolist() == [1.0, 3.0]

    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            make_dist([1.0, 2.0], [0.6, 0.6])
        with pytest.raises(ValueError):
            make_dist([1.0, 2.0], [1.2, -0.2])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            make_dist([1.0], [0.5, 0.5])

    def test_support_cap_enforced(self):
        vals = np.arange(SUPPORT_CAP + 1, dtype=float)
        probs = np.full(SUPPORT_CAP + 1, 1.0 / (SUPPORT_CAP + 1))
        with pytest.raises(SupportCapExceeded):
            make_dist(vals, probs)
        # and the cap is a parameter, not a constant baked into the math
        make_dist(vals, probs, cap=SUPPORT_CAP + 1)

    def test_point_mass(self):
        d = point(7.5)
        assert d.is_point
        assert d.mean() == 7.5
        assert d.var() == 0.0

    def test_frozen(self):
        d = point(1.0)
        with pytest.raises(Exception):
            d.support = np.array([2.0])


class TestMoments:
    def test_mean_var_hand_case(self):
        d = make_dist([0.0, 10.0], [0.75, 0.25])
        assert d.mean() == pytest.approx(2.5)
        assert d.var() == pytest.approx(0.25 * 0.75 * 100.0)

    @given(small_dists())
    def test_var_nonnegative(self, d):
        assert d.var() >= -1e-12


class TestNormalDiscretization:
    def test_standard_normal_two_bins(self):
        # Two equal-probability cells of N(0, 1): conditional means are the
        # half-normal means +-sqrt(2/pi).
        d = discretize_normal(0.0, 1.0, bins=2)
        expected = np.sqrt(2.0 / np.pi)
        assert d.probs.tolist() == pytest.approx([0.5, 0.5])
        assert d.support.tolist() == pytest.approx([-expected, expected],
                                                   abs=1e-3)

    def test_mean_exactly_preserved(self):
        d = discretize_normal(12.0, 30.0, bins=4)
        assert d.mean() == pytest.approx(12.0, abs=1e-9)

    def test_variance_underestimates_and_converges(self):
        lo = discretize_normal(0.0, 10.0, bins=4)
        hi = discretize_normal(0.0, 10.0, bins=64)
        assert lo.var() < 100.0
        assert lo.var() < hi.var() < 100.0
        assert hi.var() == pytest.approx(100.0, rel=0.05)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            discretize_normal(0.0, -1.0)
        with pytest.raises(ValueError):
            discretize_normal(0.0, 1.0, bins=0)


class TestAdd:
    def test_point_shift(self):
        d = make_dist([0.0, 10.0], [0.5, 0.5])
        s = add_dists(d, point(5.0))
        assert s.support.tolist() == [5.0, 15.0]

    def test_hand_convolution(self):
        a = make_dist([0.0, 1.0], [0.5, 0.5])
        s = add_dists(a, a)
        assert s.support.tolist() == [0.0, 1.0, 2.0]
        assert s.probs.tolist() == pytest.approx([0.25, 0.5, 0.25])

    @given(small_dists(), small_dists())
    def test_mean_adds(self, a, b):
        assert add_dists(a, b).mean() == pytest.approx(a.mean() + b.mean())

    @given(small_dists(), small_dists())
    def test_commutes(self, a, b):
        assert dists_close(add_dists(a, b), add_dists(b, a))

    @given(small_dists(), small_dists())
    def test_matches_enumeration(self, a, b):
        got = {}
        for va, pa in brute_pairs(a):
            for vb, pb in brute_pairs(b):
                got[va + vb] = got.get(va + vb, 0.0) + pa * pb
        want = make_dist(list(got), list(got.values()))
        assert dists_close(add_dists(a, b), want)


class TestMax:
    def test_dominated_point_is_identity(self):
        d = make_dist([5.0, 10.0], [0.5, 0.5])
        assert dists_close(max_dists(d, point(-100.0)), d)

    def test_dominating_point_wins(self):
        d = make_dist([5.0, 10.0], [0.5, 0.5])
        assert dists_close(max_dists(d, point(100.0)), point(100.0))

    @given(small_dists(), small_dists())
    def test_matches_enumeration(self, a, b):
        got = {}
        for va, pa in brute_pairs(a):
            for vb, pb in brute_pairs(b):
                v = max(va, vb)
                got[v] = got.get(v, 0.0) + pa * pb
        want = make_dist(list(got), list(got.values()))
        assert dists_close(max_dists(a, b), want)

    @given(small_dists(), small_dists())
    def test_mean_dominates_both(self, a, b):
        m = max_dists(a, b).mean()
        assert m >= a.mean() - 1e-9
        assert m >= b.mean() - 1e-9


class TestMix:
    def test_hand_mixture(self):
        m = mix_dists([point(0.0), point(10.0)], [0.25, 0.75])
        assert m.support.tolist() == [0.0, 10.0]
        assert m.probs.tolist() == pytest.approx([0.25, 0.75])

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            mix_dists([point(0.0), point(1.0)], [0.5, 0.6])

    @given(st.lists(small_dists(), min_size=1, max_size=3))
    @settings(max_examples=30)
    def test_mean_is_weighted_mean(self, parts):
        w = [1.0 / len(parts)] * len(parts)
        m = mix_dists(parts, w)
        assert m.mean() == pytest.approx(
            sum(wi * d.mean() for wi, d in zip(w, parts)))


class TestClose:
    def test_tolerates_tiny_atom_jitter(self):
        a = make_dist([1.0, 2.0], [0.5, 0.5])
        b = make_dist([1.0 + 1e-12, 2.0], [0.5, 0.5])
        assert dists_close(a, b)

    def test_detects_probability_difference(self):
        a = make_dist([1.0, 2.0], [0.5, 0.5])
        b = make_dist([1.0, 2.0], [0.6, 0.4])
        assert not dists_close(a, b)

    def test_detects_support_difference(self):
        assert not dists_close(point(1.0), point(2.0))
