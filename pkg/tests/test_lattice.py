import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probmra.errors import BudgetError, NotSimilarityError, SingularMatrixError
from probmra.lattice import (_ball_depth, analyze_matrix, build_digit_system, choose_power, expand,
                             expansion_length_bound, overlap_estimate, reconstruct, residue_key,
                             sample_tile, tile_ball_radius, tile_measure_estimate)

from oracles import DIGITS_B4, EXPAND_5, EXPAND_MINUS_3

QUINCUNX = [[1, 1], [-1, 1]]


def test_analyze_quincunx():
    A = analyze_matrix(QUINCUNX)
    assert A.det == 2 and A.expansive and A.similarity
    assert np.allclose(A.moduli, [2 ** 0.5] * 2)
    assert choose_power(A) == 3


def test_singular_and_non_similarity():
    with pytest.raises(SingularMatrixError):
        build_digit_system([[1, 2], [2, 4]])
    with pytest.raises(NotSimilarityError):
        build_digit_system([[2, 0], [0, 3]])
    assert not analyze_matrix([[1, 1], [0, 1]]).expansive


def test_digits_b4():
    s = build_digit_system([[2]])
    assert s.p == 2 and s.B.entries == ((4,),)
    assert sorted(d[0] for d in s.digits) == DIGITS_B4


def test_quincunx_digits_distinct_cosets():
    s = build_digit_system(QUINCUNX)
    assert s.p == 3 and s.q == 8
    keys = {residue_key(s.B, d) for d in s.digits}
    assert len(keys) == 8


def test_frozen_expansions():
    s = build_digit_system([[2]])
    assert tuple(s.digits[i][0] for i in expand(s, [5]).digit_indices) == EXPAND_5
    assert tuple(s.digits[i][0] for i in expand(s, [-3]).digit_indices) == EXPAND_MINUS_3


@pytest.mark.parametrize("A", [[[2]], [[3]], QUINCUNX, [[2, 0], [0, 2]]])
def test_roundtrip_and_injective(A):
    s = build_digit_system(A)
    d = s.B.d
    seen = set()
    for k in itertools.product(range(-20, 21), repeat=d):
        e = expand(s, k)
        assert reconstruct(s, e.digit_indices) == tuple(k)
        assert e.n <= expansion_length_bound(s, k)
        assert e.digit_indices not in seen
        seen.add(e.digit_indices)


@settings(max_examples=100, deadline=None)
@given(k=st.tuples(st.integers(-10 ** 6, 10 ** 6), st.integers(-10 ** 6, 10 ** 6)))
def test_roundtrip_large(k):
    s = build_digit_system(QUINCUNX)
    assert reconstruct(s, expand(s, k).digit_indices) == k


def test_expand_zero_is_empty():
    s = build_digit_system(QUINCUNX)
    assert expand(s, (0, 0)).n == 0
    assert _ball_depth(s) >= 0


def test_tile_b4_interval():
    s = build_digit_system([[2]])
    t = sample_tile(s, 10, "exhaustive")
    lo, hi = t.points.min(), t.points.max()
    assert abs(lo + 1 / 3) <= 4.0 ** -10 and abs(hi - 2 / 3) <= 4.0 ** -10
    assert tile_measure_estimate(t).value == pytest.approx(1.0, abs=0.05)


def test_tile_in_ball():
    s = build_digit_system(QUINCUNX)
    t = sample_tile(s, 6, "monte_carlo", 20000, seed=3)
    assert np.linalg.norm(t.points, axis=1).max() <= tile_ball_radius(s)


def test_tile_seed_reproducible():
    s = build_digit_system(QUINCUNX)
    a = sample_tile(s, 5, "monte_carlo", 1000, seed=7).points
    b = sample_tile(s, 5, "monte_carlo", 1000, seed=7).points
    assert np.array_equal(a, b)


def test_tile_budget():
    s = build_digit_system(QUINCUNX)
    with pytest.raises(BudgetError):
        sample_tile(s, 12, "exhaustive", budget=1000)


def test_depth_zero_warns():
    s = build_digit_system([[2]])
    with pytest.warns(UserWarning):
        m = tile_measure_estimate(sample_tile(s, 0, "exhaustive"))
    assert m.value == 0.0 and m.warning


def test_overlap_small():
    s = build_digit_system(QUINCUNX)
    t = sample_tile(s, 8, "monte_carlo", 50000, seed=1)
    assert overlap_estimate(t, (1, 0))["interior_overlap"] <= 0.02
