"""Low-pass verification: tightness, dyadic limits, condition (C), verdicts.

All statements that hold "almost everywhere" are checked on a finite set of
sample points: a uniform grid j/n of [0, 1) plus optional probe points.  Probe
points are reported separately, since an exceptional set of measure zero is
invisible to any uniform grid and must be looked at on purpose.

The limit masses P_xi(k) = |hat-phi(xi+k)|^2 are shared by all scans: for a
truncation K they are computed on the window [-L, L) with L the smallest power
of two above K, which contains both |k| <= K and the msb windows
[-2^(n-1), 2^(n-1)) for n <= log2(L) + 1.

Tail masses are nondecreasing in the table level N (every P^N(k) is
nonincreasing in N), so sup_N tail_N(n) is the limit tail
1 - sum_{msb(k) < n} P_xi(k).  That limit tail, computed from the window, is
what certifies n(eps).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .measures import (MAX_TABLE_LEVEL, build_tables, dyadic_factors, limit_masses,
                       reduce_xi, require_qmf, tail_mass)

TIGHT, NOT_TIGHT, INCONCLUSIVE = "tight", "not_tight", "inconclusive"


@dataclass
class ScanConfig:
    grid_n: int = 1024
    probes: tuple = ()
    N_max: int = 12
    K: int = 2047
    J_max: int = 64
    eps: tuple = (1e-2, 1e-4)
    tol: float = 1e-6
    floor: float = 1e-3
    margin: float = 0.05
    k_lo: int = -8
    k_hi: int = 7
    j_max: int = 40
    limit_tol: float = 1e-12
    threads: int = 1

    def validate(self) -> None:
        if self.grid_n < 1:
            raise DomainError("grid count must be >= 1")
        for name in ("N_max", "K", "J_max", "j_max"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        if self.N_max > MAX_TABLE_LEVEL:
            raise DomainError(f"N_max must be <= {MAX_TABLE_LEVEL}")
        if not self.eps or any(not 0 < e < 1 for e in self.eps):
            raise DomainError("eps values must lie in (0, 1)")
        if self.k_lo > -1 or self.k_hi < 0:
            raise DomainError("k range must contain both signs (k_lo <= -1 <= 0 <= k_hi)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probes"] = [str(p) if isinstance(p, Fraction) else float(p) for p in self.probes]
        d["eps"] = [float(e) for e in self.eps]
        return d


def uniform_grid(n: int) -> list:
    return [j / n for j in range(n)]


def xi_key(xi):
    return str(xi) if isinstance(xi, Fraction) else float(xi)


def _pmap(fn, items, threads: int):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# shared limit windows
# ---------------------------------------------------------------------------

@dataclass
class LimitWindow:
    xi: object
    L: int
    values: np.ndarray      # P_xi(k) for k in [-L, L), index k + L
    converged: np.ndarray
    level: int

    def mass(self, k: int) -> float:
        return float(self.values[k + self.L])

    def restricted(self, K: int) -> tuple:
        """(ks, values) for |k| <= K."""
        lo, hi = self.L - K, self.L + K + 1
        return np.arange(-K, K + 1), self.values[lo:hi]

    def limit_tail(self, n: int) -> float:
        h = 1 << (n - 1)
        inside = self.values[self.L - h:self.L + h]
        return max(0.0, 1.0 - math.fsum(inside))

    def certified(self, n: int) -> bool:
        h = 1 << (n - 1)
        return bool(np.all(self.converged[self.L - h:self.L + h]))


def window_size(K: int) -> int:
    return 1 << int(K).bit_length()


def limit_window(filt, xi, K: int, J_max: int, tol: float = 1e-12, cache=None) -> LimitWindow:
    L = window_size(K)
    key = (xi_key(xi), L, J_max, tol)
    if cache is not None and key in cache:
        return cache[key]
    ks = np.arange(-L, L, dtype=np.int64)
    vals, conv, level = limit_masses(filt, xi, ks, J_max, tol)
    win = LimitWindow(xi, L, vals, conv, level)
    if cache is not None:
        cache[key] = win
    return win


# ---------------------------------------------------------------------------
# tightness
# ---------------------------------------------------------------------------

@dataclass
class XiTightness:
    xi: object
    probe: bool
    tail_curve: list           # n = 1..N_max+1: sup over N <= N_max of tail_N(n)
    limit_tail: list           # n = 1..m+1 from limit masses
    n_eps: dict                # eps -> smallest certified n, or None
    retained: float            # sum_{|k|<=K} P_xi(k)
    retained_by_level: list    # N = 0..N_max: sum_{|k|<=K} P^N(k)
    verdict: str

    def to_dict(self) -> dict:
        return {
            "xi": xi_key(self.xi),
            "probe": self.probe,
            "tail_curve": [float(v) for v in self.tail_curve],
            "limit_tail": [float(v) for v in self.limit_tail],
            "n_eps": {repr(float(e)): n for e, n in self.n_eps.items()},
            "retained": float(self.retained),
            "retained_by_level": [float(v) for v in self.retained_by_level],
            "verdict_b": self.verdict,
        }


@dataclass
class TightnessReport:
    points: list
    verdict: str               # aggregate over grid points (probes excluded)
    failing: list              # xi values (grid or probe) whose verdict is not tight
    eps: tuple
    K: int
    N_max: int

    def grid_points(self):
        return [p for p in self.points if not p.probe]

    def probe_points(self):
        return [p for p in self.points if p.probe]


def _tightness_at(filt, xi, probe, N_max, eps_list, K, J_max, margin, limit_tol, cache):
    tables = build_tables(filt, xi, N_max, check_qmf=False)
    curve = []
    for n in range(1, N_max + 2):
        curve.append(max(tail_mass(t, n) for t in tables))
    retained_by_level = [t.retained(K) for t in tables]
    win = limit_window(filt, xi, K, J_max, limit_tol, cache)
    m = win.L.bit_length() - 1
    ltail = [win.limit_tail(n) for n in range(1, m + 2)]
    n_eps = {}
    for e in sorted(eps_list, reverse=True):
        found = None
        for n in range(1, m + 2):
            fin = curve[n - 1] if n <= len(curve) else 0.0
            if max(fin, ltail[n - 1]) <= e and win.certified(n):
                found = n
                break
        n_eps[e] = found
    retained = float(np.sum(win.restricted(K)[1]))
    thresh = 1.0 - max(eps_list) - margin
    # Over a fixed window the retained mass is nonincreasing in N once 2^N > K,
    # so "below the threshold from some level on" is decided at the last level.
    last = retained_by_level[-1] if (1 << N_max) > K else 0.0
    if all(n is not None for n in n_eps.values()):
        verdict = TIGHT
    elif retained < thresh and last < thresh:
        verdict = NOT_TIGHT
    else:
        verdict = INCONCLUSIVE
    return XiTightness(xi, probe, curve, ltail, n_eps, retained, retained_by_level, verdict)


def tightness_scan(filt, xi_grid: Sequence, N_max: int = 12, eps_list=(1e-2, 1e-4),
                   K: int = 2047, J_max: int = 64, probes: Sequence = (),
                   margin: float = 0.05, limit_tol: float = 1e-12, threads: int = 1,
                   cache=None) -> TightnessReport:
    """Tightness of the family {P^N_xi} at each sampled xi.

    n(eps) is the smallest n whose certified tail (the limit tail, which
    dominates every finite-level tail) is at most eps.  A point is tight when
    n(eps) exists for every eps, not_tight when the retained mass over |k| <= K
    is below 1 - max(eps) - margin in the limit and at the last tested level
    (when 2^N_max > K), and inconclusive otherwise.
    """
    if not xi_grid and not probes:
        raise DomainError("xi grid is empty")
    if N_max > MAX_TABLE_LEVEL:
        raise DomainError(f"N_max must be <= {MAX_TABLE_LEVEL}")
    require_qmf(filt)
    cache = {} if cache is None else cache
    items = [(reduce_xi(x), False) for x in xi_grid] + [(reduce_xi(x), True) for x in probes]
    pts = _pmap(lambda it: _tightness_at(filt, it[0], it[1], N_max, eps_list, K, J_max,
                                         margin, limit_tol, cache), items, threads)
    grid = [p for p in pts if not p.probe]
    verdicts = {p.verdict for p in grid}
    if not grid:
        agg = INCONCLUSIVE
    elif verdicts == {TIGHT}:
        agg = TIGHT
    elif NOT_TIGHT in verdicts:
        agg = NOT_TIGHT
    else:
        agg = INCONCLUSIVE
    failing = [xi_key(p.xi) for p in pts if p.verdict != TIGHT]
    return TightnessReport(pts, agg, failing, tuple(eps_list), K, N_max)


# ---------------------------------------------------------------------------
# condition (C)
# ---------------------------------------------------------------------------

@dataclass
class XiWitness:
    xi: object
    witness_k: int
    witness_mass: float
    mass_at_zero: float
    interval: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {"xi": xi_key(self.xi), "witness_k": int(self.witness_k),
                "witness_mass": float(self.witness_mass),
                "mass_at_zero": float(self.mass_at_zero),
                "witness_interval": None if self.interval is None
                else [xi_key(self.interval[0]), xi_key(self.interval[1])]}


@dataclass
class ConditionCReport:
    points: list
    delta_hat: float              # inf over samples of max_{|k|<=K} P_xi(k)
    failures: list                # xi with witness mass below the floor
    floor: float
    inf_mass_at_zero: float       # inf over samples of |hat-phi(xi)|^2

    def aggregate(self) -> dict:
        return {"delta_hat": float(self.delta_hat),
                "inf_sup_translate_mass": float(self.delta_hat),
                "inf_mass_at_zero": float(self.inf_mass_at_zero),
                "floor": float(self.floor),
                "failures": list(self.failures)}


def condition_c_scan(filt, xi_grid: Sequence, K: int = 64, J_max: int = 64,
                     floor: float = 1e-3, limit_tol: float = 1e-12, threads: int = 1,
                     cache=None) -> ConditionCReport:
    """max_{|k|<=K} P_xi(k) at each sampled xi with its witness k*(xi).

    Witness intervals: for each xi, the run of neighbouring samples (in sorted
    order) on which P(k*(xi)) stays at least delta_hat/2.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    if not xi_grid:
        raise DomainError("xi grid is empty")
    cache = {} if cache is None else cache
    xs = [reduce_xi(x) for x in xi_grid]
    wins = _pmap(lambda x: limit_window(filt, x, K, J_max, limit_tol, cache), xs, threads)
    rows = np.array([w.restricted(K)[1] for w in wins])
    best = np.argmax(rows, axis=1)
    bmass = rows[np.arange(len(xs)), best]
    delta = float(bmass.min())
    at_zero = np.array([w.mass(0) for w in wins])
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    pos = {i: r for r, i in enumerate(order)}
    pts = []
    for i, x in enumerate(xs):
        col = best[i]
        r = pos[i]
        lo = hi = r
        while lo > 0 and rows[order[lo - 1], col] >= delta / 2:
            lo -= 1
        while hi < len(order) - 1 and rows[order[hi + 1], col] >= delta / 2:
            hi += 1
        pts.append(XiWitness(x, int(col) - K, float(bmass[i]), float(at_zero[i]),
                             (xs[order[lo]], xs[order[hi]])))
    failures = [xi_key(p.xi) for p in pts if p.witness_mass < floor]
    return ConditionCReport(pts, delta, failures, floor, float(at_zero.min()))


# ---------------------------------------------------------------------------
# dyadic limits
# ---------------------------------------------------------------------------

@dataclass
class XiDyadic:
    xi: object
    ks: list
    sequences: np.ndarray      # shape (len(ks), j_max+1)
    converged: np.ndarray

    def to_dict(self, with_sequences: bool = False) -> dict:
        d = {"xi": xi_key(self.xi),
             "k": [int(k) for k in self.ks],
             "final": [float(v) for v in self.sequences[:, -1]],
             "converged": [bool(c) for c in self.converged]}
        if with_sequences:
            d["sequences"] = [[float(v) for v in row] for row in self.sequences]
        return d

    def positive_ok(self) -> bool:
        return bool(all(c for k, c in zip(self.ks, self.converged) if k >= 0))

    def negative_ok(self) -> bool:
        return bool(all(c for k, c in zip(self.ks, self.converged) if k <= -1))


@dataclass
class DyadicLimitReport:
    points: list
    L_plus: float
    L_minus: float
    tol: float
    decisive_plus: bool        # every failing positive-side sequence ends far below 1
    decisive_minus: bool


def _dyadic_at(filt, xi, ks, j_max, J_max):
    n_l = j_max + J_max
    F = np.array([dyadic_factors(filt, xi, ks, l) for l in range(1, n_l + 1)])
    seq = np.empty((len(ks), j_max + 1))
    for j in range(j_max + 1):
        seq[:, j] = np.prod(F[j:j + J_max], axis=0)
    return np.clip(seq, 0.0, 1.0)


def dyadic_limit_scan(filt, xi_grid: Sequence, k_range=(-8, 7), j_max: int = 40,
                      tol: float = 1e-6, J_max: int = 64, threads: int = 1) -> DyadicLimitReport:
    """j -> |hat-phi((xi+k)/2^j)|^2 for j = 0..j_max, each hat-phi truncated
    at J_max factors.  A sequence converges when its last value is >= 1 - tol.

    L+ is estimated as the fraction of samples where every k >= 0 in range
    converges, L- likewise for k <= -1.
    """
    if j_max < 1:
        raise DomainError("j_max must be >= 1")
    if not xi_grid:
        raise DomainError("xi grid is empty")
    lo, hi = k_range
    ks = np.arange(lo, hi + 1, dtype=np.int64)
    xs = [reduce_xi(x) for x in xi_grid]

    def one(x):
        seq = _dyadic_at(filt, x, ks, j_max, J_max)
        return XiDyadic(x, [int(k) for k in ks], seq, seq[:, -1] >= 1.0 - tol)

    pts = _pmap(one, xs, threads)
    lp = float(np.mean([p.positive_ok() for p in pts]))
    lm = float(np.mean([p.negative_ok() for p in pts]))

    def decisive(sign):
        finals = [v for p in pts for k, v, c in zip(p.ks, p.sequences[:, -1], p.converged)
                  if not c and (k >= 0) == (sign > 0)]
        return bool(finals) and max(finals) < 0.5

    return DyadicLimitReport(pts, lp, lm, tol, decisive(+1), decisive(-1))


# ---------------------------------------------------------------------------
# orthonormality residual
# ---------------------------------------------------------------------------

def orthonormality_check(filt, xi_grid: Sequence, K: int = 64, J_max: int = 64,
                         limit_tol: float = 1e-12, cache=None) -> list:
    """Per-xi residual 1 - sum_{|k|<=K} P_xi(k) of the truncated translate sum."""
    cache = {} if cache is None else cache
    out = []
    for x in xi_grid:
        x = reduce_xi(x)
        win = limit_window(filt, x, K, J_max, limit_tol, cache)
        out.append((x, 1.0 - float(np.sum(win.restricted(K)[1]))))
    return out


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    b_ok: Optional[bool]
    c_ok: Optional[bool]
    low_pass: str
    tightness: TightnessReport
    dyadic: DyadicLimitReport
    condition_c: ConditionCReport
    exceptional_points: list = field(default_factory=list)
    caveats: list = field(default_factory=list)


def theorem1_verdict(filt, config: Optional[ScanConfig] = None) -> Verdict:
    """Combine the tightness scan (probability concentrated on finite
    sequences) and the dyadic-limit scan (positive-measure sets L+ and L-)
    into a low-pass verdict: yes, no or inconclusive.

    The verdict is taken over the uniform grid; probe points that fail are
    listed as exceptional points and do not change an a.e. verdict.
    """
    cfg = config or ScanConfig()
    cfg.validate()
    grid = uniform_grid(cfg.grid_n)
    cache = {}
    tight = tightness_scan(filt, grid, cfg.N_max, cfg.eps, cfg.K, cfg.J_max, cfg.probes,
                           cfg.margin, cfg.limit_tol, cfg.threads, cache)
    dyad = dyadic_limit_scan(filt, grid, (cfg.k_lo, cfg.k_hi), cfg.j_max, cfg.tol,
                             cfg.J_max, cfg.threads)
    cond = condition_c_scan(filt, grid + list(cfg.probes), cfg.K, cfg.J_max, cfg.floor,
                            cfg.limit_tol, cfg.threads, cache)

    b_ok = {TIGHT: True, NOT_TIGHT: False}.get(tight.verdict)
    if dyad.L_plus > 0 and dyad.L_minus > 0:
        c_ok = True
    elif (dyad.L_plus == 0 and dyad.decisive_plus) or (dyad.L_minus == 0 and dyad.decisive_minus):
        c_ok = False
    else:
        c_ok = None
    if b_ok is False or c_ok is False:
        low = "no"
    elif b_ok and c_ok:
        low = "yes"
    else:
        low = "inconclusive"

    exceptional = [{"xi": xi_key(p.xi), "verdict_b": p.verdict, "retained": float(p.retained)}
                   for p in tight.probe_points() if p.verdict != TIGHT]
    caveats = [f"a.e. statements tested on a uniform grid of {cfg.grid_n} points"
               + (f" plus {len(cfg.probes)} probe point(s)" if cfg.probes else ""),
               f"limit masses truncated at J_max = {cfg.J_max} factors, windows |k| <= {cfg.K}",
               f"dyadic limits taken at j = {cfg.j_max} with tolerance {cfg.tol:g}"]
    if b_ok is None:
        bad = [x for x in tight.failing]
        caveats.append(f"tightness undecided at {len(bad)} sample(s); raise K or J_max")
    if c_ok is None:
        caveats.append("dyadic-limit sets could not be separated from zero measure")
    if exceptional:
        caveats.append("probe points fail tightness; this is a measure-zero set for the a.e. verdict")
    return Verdict(b_ok, c_ok, low, tight, dyad, cond, exceptional, caveats)
