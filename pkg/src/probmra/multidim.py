"""d-dimensional filters and product measures for a digit system.

A lattice filter is a one-periodic function M on R^d with values in [0, 1].
For a dilation A the QMF condition reads sum_i M(xi + (A^T)^{-1} r_i) = 1
over coset representatives r_i of Z^d / A^T Z^d.  With B = (A^T)^p the
composed filter M~(xi) = prod_{j<p} M((A^T)^j xi) satisfies the same identity
for B, and the level-N measures are

    P^N_xi(k) = prod_{j=1..N} M~(B^{-j}(xi + k)),   k in Z_N,

where Z_N is the set of integers sum_{j<N} B^j r_{i_j} with all q^N digit
strings of length N.  Z_N is a complete residue system mod B^N, so the
masses sum to 1.

Points are float arrays of shape (n, d), or a list of Fraction tuples for
exact evaluation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, DomainError, LatticeError, QMFError
from .filters import ValidationOutcome
from .lattice import (DIGIT_BUDGET, DigitSystem, LatticeMatrix, _matpow, _matvec,
                      _transpose, analyze_matrix, coset_representatives)


def _is_exact(points) -> bool:
    return not isinstance(points, np.ndarray)


class LatticeFilter:
    """Base class; subclasses implement ``_float`` and ``_exact``."""

    d: int = 1
    name: str = "lattice-filter"

    def evaluate(self, points):
        if _is_exact(points):
            return np.array([self._exact(tuple(p)) for p in points], dtype=float)
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        return np.clip(self._float(pts), 0.0, 1.0)

    __call__ = evaluate

    def _float(self, pts):
        raise NotImplementedError

    def _exact(self, pt):
        return float(self._float(np.array([[float(v) for v in pt]]))[0])


@dataclass(frozen=True, eq=False)
class SeparableFilter(LatticeFilter):
    """prod_i M_i(xi_i) from scalar filters."""

    factors: tuple

    @property
    def d(self):
        return len(self.factors)

    @property
    def name(self):
        return "separable(" + ",".join(f.name for f in self.factors) + ")"

    def _float(self, pts):
        out = np.ones(len(pts))
        for i, f in enumerate(self.factors):
            out = out * np.asarray(f.evaluate(pts[:, i]), dtype=float)
        return out

    def _exact(self, pt):
        return math.prod(f.evaluate(Fraction(v)) for f, v in zip(self.factors, pt))


def lift(filt) -> SeparableFilter:
    """A scalar filter as a 1-dimensional lattice filter."""
    return SeparableFilter((filt,))


@dataclass(frozen=True, eq=False)
class QuincunxCosineFilter(LatticeFilter):
    """M(xi) = 1/2 + (cos 2 pi xi_1 + cos 2 pi xi_2) / 4, a QMF filter for the
    quincunx dilation [[1, 1], [-1, 1]]."""

    @property
    def d(self):
        return 2

    @property
    def name(self):
        return "quincunx-cosine"

    def _float(self, pts):
        return 0.5 + 0.25 * (np.cos(2 * np.pi * pts[:, 0]) + np.cos(2 * np.pi * pts[:, 1]))


@dataclass(frozen=True, eq=False)
class ConstantFilter(LatticeFilter):
    value: float
    dim: int = 1

    @property
    def d(self):
        return self.dim

    @property
    def name(self):
        return f"constant({self.value})"

    def _float(self, pts):
        return np.full(len(pts), float(self.value))

    def _exact(self, pt):
        return float(self.value)


@dataclass(frozen=True, eq=False)
class ComposedFilter(LatticeFilter):
    """M~(xi) = prod_{j=0..p-1} M(C^j xi) for an integer matrix C (C = A^T)."""

    base: LatticeFilter
    C: tuple
    p: int

    @property
    def d(self):
        return self.base.d

    @property
    def name(self):
        return f"tilde({self.base.name}, p={self.p})"

    def _float(self, pts):
        C = np.array(self.C, dtype=float)
        out = np.ones(len(pts))
        cur = pts.copy()
        for j in range(self.p):
            out = out * self.base.evaluate(cur)
            cur = np.mod(cur @ C.T, 1.0)
        return out

    def _exact(self, pt):
        out = 1.0
        cur = tuple(Fraction(v) for v in pt)
        for j in range(self.p):
            out *= self.base._exact(cur)
            cur = _matvec(self.C, cur)
        return out


def m_tilde(M: LatticeFilter, A, p: int) -> LatticeFilter:
    """The composed filter prod_{j<p} M((A^T)^j xi); p = 1 returns M itself."""
    if p < 1:
        raise DomainError("p must be >= 1")
    if p == 1:
        return M
    A = A if isinstance(A, LatticeMatrix) else analyze_matrix(A)
    return ComposedFilter(M, _transpose(A.entries), p)


# ---------------------------------------------------------------------------
# QMF checks
# ---------------------------------------------------------------------------

def _coset_sum_residual(M: LatticeFilter, C: LatticeMatrix, grid_n: int):
    """max over grid of |sum_i M(xi + C^{-1} r_i) - 1| for coset reps of C."""
    reps = np.array(coset_representatives(C), dtype=float).reshape(-1, C.d)
    shifts = reps @ C.inverse_float().T
    axes = [np.arange(grid_n) / grid_n] * C.d
    grid = np.array(list(itertools.product(*axes)), dtype=float)
    total = np.zeros(len(grid))
    for s in shifts:
        total += M.evaluate(grid + s)
    res = np.abs(total - 1.0)
    i = int(np.argmax(res))
    return float(res[i]), tuple(grid[i])


def multidim_qmf_check(M: LatticeFilter, sys: DigitSystem, grid_n: int = 32,
                       tol: float = 1e-12) -> ValidationOutcome:
    """Coset-sum identity for A^T (digits of Z^d / A^T Z^d) and for B with the
    composed filter, plus M(0) = 1.  Reports the worst residual of the two."""
    if M.d != sys.B.d:
        raise LatticeError(f"filter dimension {M.d} differs from lattice dimension {sys.B.d}")
    At = analyze_matrix(_transpose(sys.A.entries))
    ra, xa = _coset_sum_residual(M, At, grid_n)
    Mt = m_tilde(M, sys.A, sys.p)
    rb, xb = _coset_sum_residual(Mt, sys.B, grid_n)
    m0 = float(M.evaluate(np.zeros((1, M.d)))[0])
    worst, wx = (ra, xa) if ra >= rb else (rb, xb)
    z = abs(m0 - 1.0)
    passed = worst <= tol and z <= tol
    if z > tol:
        msg = f"M(0) = {m0!r} differs from 1"
    else:
        msg = f"A-level residual {ra:.3e}, B-level residual {rb:.3e}"
    return ValidationOutcome(passed, wx, max(worst, z), tol, grid_n, m0, msg)


# ---------------------------------------------------------------------------
# telescoping
# ---------------------------------------------------------------------------

def telescoping_sides(M: LatticeFilter, sys: DigitSystem, xi, J: int) -> tuple:
    """(prod_{j<=J} M~(B^{-j} xi), prod_{j<=pJ} M((A^T)^{-j} xi)) for one xi."""
    xi = np.asarray(xi, dtype=float).reshape(1, -1)
    Mt = m_tilde(M, sys.A, sys.p)
    Binv = sys.B.inverse_float()
    Ainv = analyze_matrix(_transpose(sys.A.entries)).inverse_float()
    left, cur = 1.0, xi
    for _ in range(J):
        cur = cur @ Binv.T
        left *= float(Mt.evaluate(cur)[0])
    right, cur = 1.0, xi
    for _ in range(sys.p * J):
        cur = cur @ Ainv.T
        right *= float(M.evaluate(cur)[0])
    return left, right


# ---------------------------------------------------------------------------
# product measures on Z_N
# ---------------------------------------------------------------------------

@dataclass
class MultiTable:
    system: DigitSystem
    xi: tuple
    N: int
    indices: np.ndarray       # (q^N, N) digit indices, position j is the B^j digit
    ks: np.ndarray            # (q^N, d) lattice points
    masses: np.ndarray

    def total(self) -> float:
        return math.fsum(self.masses)

    def in_level(self, n: int) -> np.ndarray:
        """Mask of k in Z_n (digits beyond position n are the zero digit)."""
        if n >= self.N:
            return np.ones(len(self.masses), dtype=bool)
        return np.all(self.indices[:, n:] == self.system.zero_index, axis=1)

    def mass_on_level(self, n: int) -> float:
        return math.fsum(self.masses[self.in_level(n)])

    def mass(self, k) -> float:
        hit = np.all(self.ks == np.asarray(k, dtype=np.int64).reshape(1, -1), axis=1)
        return float(self.masses[hit].sum())


def enumerate_level(sys: DigitSystem, N: int, budget: int = DIGIT_BUDGET):
    """All q^N digit strings and their lattice points sum_{j<N} B^j r_{i_j}."""
    if sys.q ** N > budget:
        raise BudgetError(f"q^N = {sys.q}^{N} exceeds the budget {budget}")
    d = sys.B.d
    q = sys.q
    idx = np.array(list(itertools.product(range(q), repeat=N)), dtype=np.int64).reshape(-1, N)
    idx = idx[:, ::-1]   # position 0 varies fastest
    R = np.array(sys.digits, dtype=np.int64).reshape(q, d)
    Bm = np.array(sys.B.entries, dtype=np.int64)
    ks = np.zeros((len(idx), d), dtype=np.int64)
    P = np.eye(d, dtype=np.int64)
    for j in range(N):
        ks += R[idx[:, j]] @ P.T
        P = P @ Bm
    return idx, ks


def _scaled_points(sys: DigitSystem, xi, ks: np.ndarray, j: int):
    """B^{-j}(xi + k) mod Z^d, the integer part handled exactly."""
    D = sys.B.det
    adjj = _matpow(sys.B.adj, j)
    Dj = D ** j
    m = abs(Dj)
    sgn = 1 if Dj > 0 else -1
    if is_exact_xi(xi):
        Binvj = [[Fraction(v, Dj) for v in row] for row in adjj]
        out = []
        for k in ks.tolist():
            v = [xi[i] + k[i] for i in range(len(k))]
            y = tuple(sum(Binvj[r][c] * v[c] for c in range(len(v))) for r in range(len(v)))
            out.append(tuple(t - math.floor(t) for t in y))
        return out
    A = np.array(adjj, dtype=object)
    y = (ks.astype(object) @ A.T) * sgn
    frac = np.array((y % m).tolist(), dtype=float) / float(m)
    Binvj = np.array(adjj, dtype=float) / float(Dj)
    return np.mod(frac + np.asarray(xi, dtype=float) @ Binvj.T, 1.0)


def is_exact_xi(xi) -> bool:
    return any(isinstance(v, Fraction) for v in xi)


def multidim_p_table(Mt: LatticeFilter, sys: DigitSystem, xi, N: int,
                     budget: int = DIGIT_BUDGET, check_qmf: Optional[LatticeFilter] = None
                     ) -> MultiTable:
    """P^N_xi(k) for all k in Z_N.

    ``check_qmf`` may pass the underlying filter M; the table then fails fast
    when M does not satisfy the coset-sum identity at 1e-9.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    if check_qmf is not None:
        out = multidim_qmf_check(check_qmf, sys, grid_n=16, tol=1e-9)
        if not out.passed:
            raise QMFError(f"filter {check_qmf.name} fails the coset-sum gate: {out.message}")
    xi = tuple(xi)
    if len(xi) != sys.B.d:
        raise DomainError(f"xi must have {sys.B.d} coordinates")
    if not is_exact_xi(xi):
        xi = tuple(float(v) - math.floor(float(v)) for v in xi)
    idx, ks = enumerate_level(sys, N, budget)
    masses = np.ones(len(ks))
    for j in range(1, N + 1):
        masses = masses * Mt.evaluate(_scaled_points(sys, xi, ks, j))
    return MultiTable(sys, xi, N, idx, ks, masses)


@dataclass
class MultiTightness:
    verdict: str
    N_eps: Optional[int]
    eps: float
    retained: list            # retained[n] = P^{N_max}(Z_n), n = 0..N_max
    witness_k: tuple
    witness_mass: float
    N_max: int

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "N_eps": self.N_eps, "eps": float(self.eps),
                "retained": [float(v) for v in self.retained],
                "witness_k": [int(v) for v in self.witness_k],
                "witness_mass": float(self.witness_mass), "N_max": self.N_max}


def multidim_tightness(Mt: LatticeFilter, sys: DigitSystem, xi, eps: float = 1e-2,
                       N_max: int = 4, min_gap: int = 2, margin: float = 0.05,
                       budget: int = DIGIT_BUDGET) -> MultiTightness:
    """Smallest N(eps) with P^{N(eps)+j}(Z_{N(eps)}) >= 1 - eps for every
    tested j.  Since P^N(Z_n) is nonincreasing in N, the test is made at
    N_max; N(eps) must leave at least ``min_gap`` extra levels.  A mass leak
    is reported when P^{N_max}(Z_n) < 1 - eps - margin at n = N_max - min_gap.

    The witness is the largest single mass at level N_max, the finite-level
    stand-in for condition (C).
    """
    if N_max < min_gap:
        raise DomainError("N_max must be at least min_gap")
    table = multidim_p_table(Mt, sys, xi, N_max, budget)
    retained = [table.mass_on_level(n) for n in range(N_max + 1)]
    n_eps = next((n for n in range(N_max - min_gap + 1) if retained[n] >= 1.0 - eps), None)
    if n_eps is not None:
        verdict = "tight"
    elif retained[N_max - min_gap] < 1.0 - eps - margin:
        verdict = "not_tight"
    else:
        verdict = "inconclusive"
    i = int(np.argmax(table.masses))
    return MultiTightness(verdict, n_eps, eps, retained, tuple(table.ks[i].tolist()),
                          float(table.masses[i]), N_max)
