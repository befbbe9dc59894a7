"""Expansive similarity dilations on Z^d: digit systems, expansions, tiles.

All lattice arithmetic is exact.  For an integer matrix B with determinant D
and adjugate adj(B) we have B^{-1} = adj(B) / D, so membership tests,
congruences and divisions are carried out on integers and Fractions only.

Digit set: the lattice points of B((-1/2, 1/2]^d), i.e. x with every
coordinate of B^{-1} x in (-1/2, 1/2].  Two lattice points are congruent mod
B(Z^d) exactly when adj(B)(x - y) = 0 mod |D|, which gives the residue key
used by the expansion.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, NotSimilarityError, SingularMatrixError, StructuralError, LatticeError

MAX_DIM = 3
DIGIT_BUDGET = 10 ** 7
EXPANSION_CAP = 1000
_SIM_TOL = 1e-9


# ---------------------------------------------------------------------------
# exact integer linear algebra
# ---------------------------------------------------------------------------

def _det(rows) -> int:
    """Bareiss fraction-free elimination; exact for integer matrices."""
    a = [list(r) for r in rows]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _adjugate(rows, det: int):
    """adj(B) = det * B^{-1}, from an exact Fraction inverse."""
    n = len(rows)
    a = [[Fraction(v) for v in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(rows)]
    for c in range(n):
        piv = next(i for i in range(c, n) if a[i][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        pv = a[c][c]
        a[c] = [v / pv for v in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    adj = []
    for i in range(n):
        row = []
        for j in range(n):
            v = a[i][n + j] * det
            if v.denominator != 1:
                raise StructuralError("adjugate is not integral")
            row.append(int(v))
        adj.append(tuple(row))
    return tuple(adj)


def _matmul(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b)))
                       for j in range(len(b[0]))) for i in range(len(a)))


def _matvec(a, v):
    return tuple(sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a)))


def _transpose(a):
    return tuple(tuple(a[j][i] for j in range(len(a))) for i in range(len(a[0])))


def _matpow(a, p: int):
    n = len(a)
    out = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    for _ in range(p):
        out = _matmul(out, a)
    return out


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeMatrix:
    entries: tuple
    d: int
    det: int
    adj: tuple
    moduli: tuple
    expansive: bool
    similarity: bool

    @property
    def modulus(self) -> float:
        """|lambda|, exact from the determinant for a similarity."""
        return abs(self.det) ** (1.0 / self.d)

    @property
    def conformal(self) -> bool:
        """B^T B = c I, so |B x| = |lambda| |x| for every x."""
        g = _matmul(_transpose(self.entries), self.entries)
        c = g[0][0]
        return all(g[i][j] == (c if i == j else 0) for i in range(self.d) for j in range(self.d))

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def inverse_float(self) -> np.ndarray:
        return np.array(self.adj, dtype=float) / self.det

    def transpose(self) -> "LatticeMatrix":
        return analyze_matrix(_transpose(self.entries))

    def power(self, p: int) -> "LatticeMatrix":
        return analyze_matrix(_matpow(self.entries, p))

    def to_dict(self) -> dict:
        return {"entries": [list(r) for r in self.entries], "d": self.d, "det": self.det,
                "eigenvalue_moduli": [float(m) for m in self.moduli],
                "expansive": self.expansive, "similarity": self.similarity}


def analyze_matrix(entries) -> LatticeMatrix:
    """Determinant (exact), eigenvalue moduli and classification of a square
    integer matrix.  Singular matrices are rejected."""
    try:
        rows = tuple(tuple(int(v) for v in r) for r in entries)
        ok = all(float(v) == int(v) for r in entries for v in r)
    except (TypeError, ValueError) as exc:
        raise LatticeError(f"matrix must be a square array of integers: {exc}") from exc
    d = len(rows)
    if d == 0 or any(len(r) != d for r in rows) or not ok:
        raise LatticeError("matrix must be a square array of integers")
    det = _det(rows)
    if det == 0:
        raise SingularMatrixError("matrix is singular")
    adj = _adjugate(rows, det)
    mod = np.sort(np.abs(np.linalg.eigvals(np.array(rows, dtype=float))))
    expansive = bool(mod[0] > 1.0 + _SIM_TOL)
    similarity = bool(mod[-1] - mod[0] <= _SIM_TOL * max(1.0, mod[-1]))
    return LatticeMatrix(rows, d, det, adj, tuple(float(m) for m in mod), expansive, similarity)


def require_similarity(A: LatticeMatrix) -> None:
    if not A.expansive:
        raise NotSimilarityError(f"matrix is not strictly expansive (moduli {A.moduli})")
    if not A.similarity:
        raise NotSimilarityError(f"matrix is not a similarity (moduli {A.moduli})")


def choose_power(A: LatticeMatrix) -> int:
    """Smallest p with |lambda|^p > 1 + sqrt(d) strictly (a tie bumps p)."""
    require_similarity(A)
    q, d = abs(A.det), A.d
    r = math.isqrt(d)
    p = 1
    while True:
        # |lambda|^p > 1 + sqrt(d)  <=>  q^p > (1 + sqrt d)^d
        if r * r == d:
            if q ** p > (1 + r) ** d:
                return p
        elif q ** (p / d) > 1.0 + math.sqrt(d):
            return p
        p += 1


# ---------------------------------------------------------------------------
# digit systems
# ---------------------------------------------------------------------------

def coset_representatives(B: LatticeMatrix) -> list:
    """Z^d intersected with B((-1/2, 1/2]^d), by exact rational tests."""
    D = B.det
    bound = [sum(abs(v) for v in row) // 2 + 1 for row in B.entries]
    out = []
    for x in itertools.product(*[range(-b, b + 1) for b in bound]):
        y = _matvec(B.adj, x)
        if all(-1 < Fraction(2 * v, D) <= 1 for v in y):
            out.append(tuple(x))
    return out


def residue_key(B: LatticeMatrix, x) -> tuple:
    m = abs(B.det)
    return tuple(v % m for v in _matvec(B.adj, x))


@dataclass(frozen=True)
class DigitSystem:
    A: LatticeMatrix
    p: int
    B: LatticeMatrix
    digits: tuple
    lookup: dict = field(compare=False, repr=False)

    @property
    def q(self) -> int:
        return len(self.digits)

    @property
    def modulus(self) -> float:
        return self.B.modulus

    @property
    def zero_index(self) -> int:
        return self.digits.index(tuple([0] * self.B.d))

    def digit_array(self) -> np.ndarray:
        return np.array(self.digits, dtype=float).reshape(self.q, self.B.d)

    def to_dict(self) -> dict:
        return {"A": [list(r) for r in self.A.entries], "p": self.p,
                "B": [list(r) for r in self.B.entries], "det_B": self.B.det,
                "modulus": self.modulus, "digits": [list(r) for r in self.digits]}


def system_from_B(B: LatticeMatrix, A: Optional[LatticeMatrix] = None, p: int = 1) -> DigitSystem:
    """Digit system for a given B; checks count and coset completeness."""
    if B.d > MAX_DIM:
        raise LatticeError(f"dimension {B.d} exceeds the cap {MAX_DIM}")
    digits = coset_representatives(B)
    if len(digits) != abs(B.det):
        raise StructuralError(f"found {len(digits)} digits, expected |det B| = {abs(B.det)}")
    lookup = {}
    for i, r in enumerate(digits):
        key = residue_key(B, r)
        if key in lookup:
            raise StructuralError(f"digits {digits[lookup[key]]} and {r} are congruent")
        lookup[key] = i
    return DigitSystem(A if A is not None else B, p, B, tuple(digits), lookup)


def build_digit_system(A) -> DigitSystem:
    """B = (A^T)^p with p from ``choose_power``, and its digit set."""
    if not isinstance(A, LatticeMatrix):
        A = analyze_matrix(A)
    require_similarity(A)
    p = choose_power(A)
    B = analyze_matrix(_matpow(_transpose(A.entries), p))
    if not B.modulus > 1.0 + math.sqrt(B.d):
        raise StructuralError("power does not satisfy the digit-expansion hypothesis")
    return system_from_B(B, A, p)


# ---------------------------------------------------------------------------
# expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeExpansion:
    k: tuple
    digit_indices: tuple

    @property
    def n(self) -> int:
        return len(self.digit_indices)


def expand(sys: DigitSystem, k, cap: int = EXPANSION_CAP) -> LatticeExpansion:
    """k = sum_j B^j r_{i_j} by greedy residue extraction, exact integers."""
    k0 = tuple(int(v) for v in np.atleast_1d(k))
    if len(k0) != sys.B.d:
        raise LatticeError(f"vector has dimension {len(k0)}, expected {sys.B.d}")
    cur = k0
    zero = tuple([0] * sys.B.d)
    out = []
    D = sys.B.det
    while cur != zero:
        if len(out) >= cap:
            raise StructuralError(f"expansion of {k0} did not terminate in {cap} steps")
        i = sys.lookup[residue_key(sys.B, cur)]
        r = sys.digits[i]
        y = _matvec(sys.B.adj, tuple(a - b for a, b in zip(cur, r)))
        if any(v % D for v in y):
            raise StructuralError("residue extraction left a non-divisible vector")
        cur = tuple(v // D for v in y)
        out.append(i)
    return LatticeExpansion(k0, tuple(out))


def reconstruct(sys: DigitSystem, digit_indices: Sequence[int]) -> tuple:
    """sum_j B^j r_{i_j}, exact."""
    acc = tuple([0] * sys.B.d)
    for i in reversed(digit_indices):
        acc = tuple(a + b for a, b in zip(_matvec(sys.B.entries, acc), sys.digits[i]))
    return acc


def _ball_depth(sys: DigitSystem) -> int:
    """Longest expansion among lattice points within radius R + 1 of 0."""
    rad = tile_ball_radius(sys) + 1.0
    b = int(math.floor(rad))
    best = 0
    for x in itertools.product(range(-b, b + 1), repeat=sys.B.d):
        if math.sqrt(sum(v * v for v in x)) <= rad:
            best = max(best, expand(sys, x).n)
    return best


def expansion_length_bound(sys: DigitSystem, k, margin: int = 0) -> int:
    """Upper bound on n(k) from the norm contraction of the expansion.

    For conformal B the remainder after n steps satisfies
    |k_n| <= |k| / |lambda|^n + R with R = (sqrt(d)/2) |lambda| / (|lambda| - 1),
    so after ceil(log_|lambda| |k|) steps it lies in the ball of radius R + 1,
    whose lattice points need at most ``_ball_depth`` further digits.
    """
    if not sys.B.conformal:
        raise LatticeError("length bound needs a conformal dilation")
    norm = math.sqrt(sum(int(v) ** 2 for v in np.atleast_1d(k)))
    steps = math.ceil(math.log(norm, sys.modulus)) if norm > 1 else 0
    return steps + _ball_depth(sys) + margin


# ---------------------------------------------------------------------------
# tiles
# ---------------------------------------------------------------------------

@dataclass
class TileSample:
    points: np.ndarray
    J: int
    mode: str
    system: DigitSystem
    seed: Optional[int] = None

    @property
    def d(self) -> int:
        return self.system.B.d


def tile_ball_radius(sys: DigitSystem) -> float:
    """Radius (sqrt(d)/2) |lambda| / (|lambda| - 1) of a ball around 0 containing T."""
    lam = sys.modulus
    return math.sqrt(sys.B.d) / 2 * lam / (lam - 1)


def sample_tile(sys: DigitSystem, J: int, mode: str = "exhaustive", count: int = 100000,
                seed: int = 0, budget: int = DIGIT_BUDGET, chunk: int = 1 << 16) -> TileSample:
    """Points sum_{j=1..J} B^{-j} r_{i_j} of the level-J approximation of T.

    Exhaustive mode enumerates all q^J digit strings; monte_carlo draws
    ``count`` strings uniformly, chunk by chunk from spawned seed streams so
    the result depends only on (seed, count).
    """
    if J < 0:
        raise LatticeError("depth must be >= 0")
    d = sys.B.d
    R = sys.digit_array()
    Binv = sys.B.inverse_float()
    if mode == "exhaustive":
        if sys.q ** J > budget:
            raise BudgetError(f"q^J = {sys.q}^{J} exceeds the budget {budget}; use monte_carlo")
        S = np.zeros((1, d))
        for _ in range(J):
            S = (R[:, None, :] + S[None, :, :]).reshape(-1, d) @ Binv.T
        return TileSample(S, J, mode, sys)
    if mode != "monte_carlo":
        raise LatticeError(f"unknown sampling mode {mode!r}")
    if count < 1:
        raise LatticeError("count must be >= 1")
    mats = []
    M = np.eye(d)
    for _ in range(J):
        M = M @ Binv
        mats.append(M.T.copy())
    sizes = [min(chunk, count - s) for s in range(0, count, chunk)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    parts = []
    for n, ss in zip(sizes, streams):
        rng = np.random.default_rng(ss)
        pts = np.zeros((n, d))
        for Mt in mats:
            pts += R[rng.integers(sys.q, size=n)] @ Mt
        parts.append(pts)
    return TileSample(np.concatenate(parts), J, mode, sys, seed)


@dataclass
class TileMeasure:
    value: float
    stderr: float
    cell: float
    interior_cells: int
    occupied_cells: int
    warning: str = ""

    def to_dict(self) -> dict:
        return {"value": float(self.value), "stderr": float(self.stderr), "cell": float(self.cell),
                "interior_cells": int(self.interior_cells),
                "occupied_cells": int(self.occupied_cells), "warning": self.warning}


def _cells(points: np.ndarray, h: float) -> dict:
    c = np.floor(points / h + 1e-9).astype(np.int64)
    uniq, counts = np.unique(c, axis=0, return_counts=True)
    return {tuple(u): int(n) for u, n in zip(uniq, counts)}


def _interior(occ: dict, d: int) -> list:
    offs = list(itertools.product((-1, 0, 1), repeat=d))
    return [c for c in occ if all(tuple(a + b for a, b in zip(c, o)) in occ for o in offs)]


def default_cell(sample: TileSample) -> float:
    # about ten sample points per cell for a tile of unit measure
    return (10.0 / len(sample.points)) ** (1.0 / sample.d)


def tile_measure_estimate(sample: TileSample, cell: Optional[float] = None) -> TileMeasure:
    """Lebesgue measure of T from the sample density.

    The digit strings are uniform, so the points are distributed according to
    normalized Lebesgue measure on T.  Inside T the expected count per cell of
    side h is n h^d / |T|; averaging over cells whose whole 3^d neighbourhood
    is occupied avoids the boundary, and |T| = n h^d / mean count.
    """
    if sample.J == 0:
        msg = "depth 0 sample is a single point; measure estimate is 0"
        warnings.warn(msg)
        return TileMeasure(0.0, 0.0, 0.0, 0, 1, msg)
    h = cell or default_cell(sample)
    occ = _cells(sample.points, h)
    inner = _interior(occ, sample.d)
    if not inner:
        msg = "no interior cells; increase the sample or the cell size"
        warnings.warn(msg)
        return TileMeasure(0.0, float("inf"), h, 0, len(occ), msg)
    counts = np.array([occ[c] for c in inner], dtype=float)
    mean = counts.mean()
    value = len(sample.points) * h ** sample.d / mean
    se = value * (counts.std(ddof=1) / math.sqrt(len(counts)) / mean if len(counts) > 1 else 1.0)
    return TileMeasure(float(value), float(se), h, len(inner), len(occ))


def overlap_estimate(sample: TileSample, shift, cell: Optional[float] = None) -> dict:
    """Measure of T intersected with T + shift, from interior cells of both
    samples.  Also reports the (boundary-inclusive) occupied-cell overlap."""
    shift = np.asarray(shift, dtype=float).reshape(sample.d)
    h = cell or default_cell(sample)
    occ1 = _cells(sample.points, h)
    occ2 = _cells(sample.points + shift, h)
    in1 = set(_interior(occ1, sample.d))
    in2 = set(_interior(occ2, sample.d))
    vol = h ** sample.d
    return {"shift": shift.tolist(), "cell": h, "interior_overlap": len(in1 & in2) * vol,
            "occupied_overlap": len(set(occ1) & set(occ2)) * vol}
