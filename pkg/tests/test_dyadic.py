import pytest
from hypothesis import given, strategies as st

from probmra.dyadic import SignedDyadicCode, cylinder, decode, encode, msb_index

from oracles import brute_code

ints = st.integers(-(1 << 40), 1 << 40)


@given(k=ints)
def test_roundtrip(k):
    assert decode(encode(k)) == k


@given(k=ints)
def test_matches_brute_force(k):
    c = encode(k)
    assert (c.sign_slot, c.digits) == brute_code(k)


@given(a=ints, b=ints)
def test_injective(a, b):
    assert (encode(a) == encode(b)) == (a == b)


@given(k=ints)
def test_msb_index(k):
    c = encode(k)
    expect = max([i for i in range(1, len(c.digits) + 1) if c.bit(i)], default=0)
    assert msb_index(k) == expect


def test_small_codes():
    assert encode(0) == SignedDyadicCode(0, ())
    assert encode(-1) == SignedDyadicCode(1, ())
    assert encode(-2) == SignedDyadicCode(1, (1,))
    assert encode(6) == SignedDyadicCode(0, (0, 1, 1))


def test_canonical_form_enforced():
    with pytest.raises(ValueError):
        SignedDyadicCode(0, (1, 0))
    with pytest.raises(ValueError):
        SignedDyadicCode(2, ())


@pytest.mark.parametrize("N", [0, 1, 3, 5])
def test_cylinders_partition_range(N):
    """Each of the 2^(N+1) level-N cylinders meets [-2^N, 2^N) exactly once."""
    seen = {}
    for k in range(-(1 << N), 1 << N):
        cyl = cylinder(k, N)
        assert cyl.contains(k)
        assert cyl not in seen
        seen[cyl] = k
    assert len(seen) == 1 << (N + 1)


def test_cylinder_contains_congruent():
    cyl = cylinder(3, 2)
    assert cyl.contains(3 + 4 * 5)
    assert not cyl.contains(-3)
