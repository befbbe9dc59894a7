"""Acceptance run: one test per criterion at the stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Frozen thresholds (the level at which the retained cusp mass drops below
0.05) were derived by direct evaluation before being fixed here.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from probmra.diagnostics import ScanConfig, condition_c_scan, theorem1_verdict, tightness_scan, uniform_grid
from probmra.filters import builtin, builtin_names, validate_qmf
from probmra.lattice import (build_digit_system, expand, overlap_estimate, reconstruct,
                             residue_key, sample_tile, tile_measure_estimate)
from probmra.measures import build_tables, consistency_residual, limit_masses, p_table
from probmra.multidim import QuincunxCosineFilter, lift, telescoping_sides

from conftest import ACCEPTANCE_LINES
from oracles import haar_limit

pytestmark = pytest.mark.acceptance

# Level N at which sum_{|k|<=64} P^N at xi = 1/3 and 2/3 first drops below
# 0.05 (by direct evaluation the sums are exactly 1 for N <= 6 and 0 after).
CUSP_DROP_LEVEL = 7


def record(label, ok, detail, seconds=None):
    t = f" [{seconds:.1f}s]" if seconds is not None else ""
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}{t}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def test_c1_qmf_validation():
    t0 = time.perf_counter()
    res = {n: validate_qmf(builtin(n), 4096, 1e-12) for n in ("haar", "d4", "shannon", "cusp")}
    dt = time.perf_counter() - t0
    exact = res["shannon"].worst_residual == 0.0 and res["cusp"].worst_residual == 0.0
    ok = all(r.passed for r in res.values()) and exact and dt < 1.0
    worst = ", ".join(f"{n} {r.worst_residual:.1e}" for n, r in res.items())
    record("1 QMF validation", ok, worst, dt)


def test_c2_measure_axioms():
    rng = np.random.default_rng(2)
    names = builtin_names()
    t0 = time.perf_counter()
    worst_sum = worst_cons = 0.0
    for _ in range(200):
        f = builtin(names[rng.integers(len(names))])
        xi = float(rng.random())
        N = int(rng.integers(0, 15))
        ts = build_tables(f, xi, N)
        worst_sum = max(worst_sum, abs(ts[-1].total() - 1.0))
        if N:
            worst_cons = max(worst_cons, consistency_residual(ts[-2], ts[-1]))
    dt = time.perf_counter() - t0
    ok = worst_sum < 1e-10 and worst_cons < 1e-12 and dt < 30
    record("2 measure axioms", ok, f"max |sum-1| {worst_sum:.1e}, max consistency {worst_cons:.1e}", dt)


def test_c3_haar_oracle():
    rng = np.random.default_rng(3)
    h = builtin("haar")
    worst = 0.0
    for _ in range(1000):
        xi = float(rng.random())
        k = int(rng.integers(-32, 33))
        v, _, _ = limit_masses(h, xi, [k], J_max=40)
        worst = max(worst, abs(v[0] - haar_limit(xi + k)))
    record("3 Haar sinc^2 oracle", worst < 1e-8, f"max error {worst:.1e}")


def test_c4_shannon_dichotomy():
    s = builtin("shannon")
    bad = 0
    for i in range(512):
        xi = Fraction(i, 512)
        t = p_table(s, xi, 4)
        k0 = 0 if xi < Fraction(1, 2) else -1
        if t.mass(k0) != 1.0 or t.total() != 1.0:
            bad += 1
    record("4 Shannon point masses", bad == 0, f"{512 - bad}/512 exact")


class TestC5Cusp:
    def test_a_tight_away_from_cusps(self):
        t0 = time.perf_counter()
        grid = [x for x in uniform_grid(1024) if min(abs(x - 1 / 3), abs(x - 2 / 3)) >= 1 / 64]
        rep = tightness_scan(builtin("cusp"), grid, N_max=12, eps_list=(1e-2,), K=64)
        lo = min(p.retained for p in rep.points)
        ok = rep.verdict == "tight" and lo >= 0.99
        record("5a cusp tight off {1/3,2/3}", ok,
               f"{len(grid)} points, verdict {rep.verdict}, min retained {lo:.5f}",
               time.perf_counter() - t0)

    def _retained(self):
        c = builtin("cusp")
        return {x: [t.retained(64) for t in build_tables(c, x, 12)]
                for x in (Fraction(1, 3), Fraction(2, 3))}

    def test_b_strictly_decreasing(self):
        seq = self._retained()
        ok = all(all(b < a for a, b in zip(s, s[1:])) for s in seq.values())
        record("5b retained mass strictly decreasing at 1/3, 2/3", ok,
               "N=0..12 sums " + "; ".join(f"{x}: {[round(v, 3) for v in s]}"
                                           for x, s in seq.items()))

    def test_c_drops_below_threshold(self):
        seq = self._retained()
        first = {str(x): next(n for n, v in enumerate(s) if v < 0.05) for x, s in seq.items()}
        ok = all(n == CUSP_DROP_LEVEL for n in first.values())
        record("5c retained mass < 0.05", ok,
               f"first level below 0.05: {first} (frozen {CUSP_DROP_LEVEL})")

    def test_d_condition_c_degenerates(self):
        t0 = time.perf_counter()
        c = builtin("cusp")
        cache = {}
        deltas = []
        for m in range(2, 12):
            xs = [Fraction(1, 3) + s * Fraction(1, 10 ** i) for i in range(2, m + 1) for s in (1, -1)]
            deltas.append(condition_c_scan(c, xs, K=64, cache=cache).delta_hat)
        ok = all(b < a for a, b in zip(deltas, deltas[1:])) and deltas[-1] < deltas[0] / 4
        record("5d condition (C) delta over refining grids", ok,
               " ".join(f"{d:.3f}" for d in deltas), time.perf_counter() - t0)


def test_c6_verdicts():
    t0 = time.perf_counter()
    cfg = ScanConfig(grid_n=256)
    v = {n: theorem1_verdict(builtin(n), cfg) for n in ("shannon", "haar", "paluszynski")}
    p = v["paluszynski"]
    ok = (v["shannon"].low_pass == "yes" and v["haar"].low_pass == "yes" and p.b_ok
          and not p.c_ok and p.dyadic.L_minus == 0 and p.low_pass == "no")
    record("6 low-pass verdicts", ok,
           f"shannon {v['shannon'].low_pass}, haar {v['haar'].low_pass}, paluszynski "
           f"b={p.b_ok} L-={p.dyadic.L_minus} -> {p.low_pass}", time.perf_counter() - t0)


def test_c7_digit_systems():
    t0 = time.perf_counter()
    s4 = build_digit_system([[2]])
    sq = build_digit_system([[1, 1], [-1, 1]])
    ok4 = sorted(d[0] for d in s4.digits) == [-1, 0, 1, 2]
    okq = sq.p == 3 and sq.q == 8 and len({residue_key(sq.B, d) for d in sq.digits}) == 8
    bad = 0
    for s in (s4, build_digit_system([[3]]), sq, build_digit_system([[2, 0], [0, 2]])):
        for k in itertools.product(range(-20, 21), repeat=s.B.d):
            if reconstruct(s, expand(s, k).digit_indices) != k:
                bad += 1
    dt = time.perf_counter() - t0
    record("7 digit systems", ok4 and okq and bad == 0 and dt < 10,
           f"B=4 digits ok {ok4}, quincunx 8 cosets ok {okq}, round-trip failures {bad}", dt)


def test_c8_tiling():
    t0 = time.perf_counter()
    s4 = build_digit_system([[2]])
    J = 10
    t4 = sample_tile(s4, J, "exhaustive")
    m4 = tile_measure_estimate(t4).value
    hull = max(abs(t4.points.min() + 1 / 3), abs(t4.points.max() - 2 / 3))
    sq = build_digit_system([[1, 1], [-1, 1]])
    tq = sample_tile(sq, 8, "monte_carlo", 100000, seed=1)
    mq = tile_measure_estimate(tq).value
    ov = max(overlap_estimate(tq, s)["interior_overlap"] for s in ((1, 0), (0, 1), (1, 1)))
    ok = abs(m4 - 1) <= 0.05 and hull <= 4.0 ** -J and abs(mq - 1) <= 0.10 and ov <= 0.02
    record("8 tiling", ok, f"|T_4| {m4:.4f}, hull error {hull:.1e}, |T_q| {mq:.4f}, overlap {ov:.4f}",
           time.perf_counter() - t0)


def test_c9_telescoping():
    rng = np.random.default_rng(9)
    systems = [(lift(builtin("haar")), build_digit_system([[2]])),
               (QuincunxCosineFilter(), build_digit_system([[1, 1], [-1, 1]]))]
    worst = 0.0
    for M, s in systems:
        for _ in range(100):
            xi = rng.random(s.B.d)
            for J in range(1, 9):
                a, b = telescoping_sides(M, s, xi, J)
                worst = max(worst, abs(a - b))
    record("9 telescoping identity", worst < 1e-12, f"max difference {worst:.1e}")
