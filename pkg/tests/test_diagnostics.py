from fractions import Fraction

import pytest

from probmra.diagnostics import (ScanConfig, condition_c_scan, dyadic_limit_scan,
                                 orthonormality_check, theorem1_verdict, tightness_scan,
                                 uniform_grid)
from probmra.filters import builtin


def test_uniform_grid():
    g = uniform_grid(8)
    assert len(g) == 8 and g[0] == 0 and max(g) < 1


def test_config_validation():
    with pytest.raises(ValueError):
        ScanConfig(grid_n=0).validate()
    with pytest.raises(ValueError):
        ScanConfig(eps=(2.0,)).validate()


@pytest.mark.parametrize("name", ["haar", "shannon", "d4"])
def test_tight_filters(name):
    rep = tightness_scan(builtin(name), uniform_grid(16), N_max=8, eps_list=(1e-2,), K=255)
    assert rep.verdict == "tight"


def test_cusp_third_not_tight():
    rep = tightness_scan(builtin("cusp"), [], N_max=10, eps_list=(1e-2,), K=64,
                         probes=[Fraction(1, 3), Fraction(2, 3)])
    assert [p.verdict for p in rep.points] == ["not_tight", "not_tight"]
    assert all(p.retained < 0.05 for p in rep.points)


def test_haar_condition_c():
    rep = condition_c_scan(builtin("haar"), uniform_grid(16), K=16)
    agg = rep.aggregate()
    assert agg["delta_hat"] == pytest.approx(4 / 3.141592653589793 ** 2, rel=1e-9)
    assert not agg["failures"]


def test_paluszynski_dyadic_limits():
    rep = dyadic_limit_scan(builtin("paluszynski"), uniform_grid(16))
    assert rep.L_plus > 0 and rep.L_minus == 0


def test_orthonormality_residual_small():
    res = orthonormality_check(builtin("d4"), [0.1, 0.6], K=512)
    assert all(r < 1e-2 for _, r in res)


@pytest.mark.parametrize("name,expect", [("shannon", "yes"), ("haar", "yes"),
                                         ("paluszynski", "no")])
def test_verdicts(name, expect):
    v = theorem1_verdict(builtin(name), ScanConfig(grid_n=64, N_max=8, K=255, eps=(1e-2,)))
    assert v.low_pass == expect
