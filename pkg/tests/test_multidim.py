from fractions import Fraction

import numpy as np
import pytest

from probmra.filters import builtin
from probmra.lattice import build_digit_system
from probmra.measures import p_table
from probmra.multidim import (ConstantFilter, QuincunxCosineFilter, SeparableFilter, lift, m_tilde,
                              multidim_p_table, multidim_qmf_check, multidim_tightness,
                              telescoping_sides)

S1 = build_digit_system([[2]])
SQ = build_digit_system([[1, 1], [-1, 1]])
S2 = build_digit_system([[2, 0], [0, 2]])


def test_qmf_checks():
    assert multidim_qmf_check(lift(builtin("haar")), S1).passed
    assert multidim_qmf_check(SeparableFilter((builtin("haar"),) * 2), S2).passed
    assert multidim_qmf_check(QuincunxCosineFilter(), SQ).passed
    assert not multidim_qmf_check(SeparableFilter((builtin("haar"),) * 2), SQ).passed
    assert not multidim_qmf_check(ConstantFilter(0.25, 2), S2).passed


def test_telescoping():
    rng = np.random.default_rng(0)
    for M, s in [(lift(builtin("d4")), S1), (QuincunxCosineFilter(), SQ)]:
        for _ in range(10):
            xi = rng.random(s.B.d)
            for J in (1, 4, 8):
                a, b = telescoping_sides(M, s, xi, J)
                assert abs(a - b) < 1e-12


def test_table_is_probability():
    Mt = m_tilde(QuincunxCosineFilter(), SQ.A, SQ.p)
    t = multidim_p_table(Mt, SQ, (0.3, 0.7), 3)
    assert t.total() == pytest.approx(1.0, abs=1e-12)


def test_one_dimensional_cross_check():
    """B = [[4]] level N equals the scalar table with 2N factors."""
    h = builtin("haar")
    t = multidim_p_table(m_tilde(lift(h), S1.A, S1.p), S1, (0.3,), 4)
    st = p_table(h, 0.3, 7)
    for k, v in zip(t.ks[:, 0], t.masses):
        assert v == pytest.approx(st.mass((int(k) + 128) % 256 - 128), abs=1e-14)


def test_separable_retained_factorizes():
    h = builtin("haar")
    Mt1 = m_tilde(lift(h), S1.A, S1.p)
    a = multidim_tightness(Mt1, S1, (0.3,), 0.1, 4).retained
    b = multidim_tightness(Mt1, S1, (0.6,), 0.1, 4).retained
    r2 = multidim_tightness(m_tilde(SeparableFilter((h, h)), S2.A, S2.p), S2, (0.3, 0.6), 0.1, 4)
    assert np.allclose(np.array(a) * np.array(b), r2.retained, atol=1e-12)
    assert r2.verdict == "tight"


def test_cusp_leaks_in_one_dimension():
    Mc = m_tilde(lift(builtin("cusp")), S1.A, S1.p)
    assert multidim_tightness(Mc, S1, (Fraction(1, 3),), 1e-2, 6).verdict == "not_tight"


def test_shannon_tight_immediately():
    Ms = m_tilde(lift(builtin("shannon")), S1.A, S1.p)
    r = multidim_tightness(Ms, S1, (0.3,), 1e-2, 4)
    assert r.verdict == "tight" and r.N_eps == 0
