"""Partial-product probabilities on the integers.

For a filter M and xi in [0, 1) the level-N measure lives on
-2^N <= k < 2^N and is built from N+1 filter factors:

    P^N(k) = Q^{N+1}_xi(k)                      for 0 <= k < 2^N,
    P^N(k) = Q~^{N+1}_{1-xi}(-(k+1))            for -2^N <= k < 0,

with Q^N_xi(k) = prod_{j=1..N} M((xi+k)/2^j) and Q~ the same product for the
reflected filter.  Since M~((1-xi-k-1)/2^j) = M((xi+k)/2^j), both branches
collapse to the single product prod_{j=1..N+1} M((xi+k)/2^j), which is how
tables are built.  ``p_mass_branch`` keeps the two-branch form for checking.

Tables are built level by level: the first N factors of P^N(k) only depend
on k mod 2^N, so P^N(k) = P^{N-1}(k') * M((xi+k)/2^{N+1}) where k' is the
representative of k mod 2^N in [-2^{N-1}, 2^{N-1}).

Products are reduced to the central window before evaluation: the argument
(xi+k)/2^j is replaced by (xi + k')/2^j with k' the centered residue of k
mod 2^j, which keeps full relative precision for every k.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, DomainError, QMFError
from .filters import FilterKind, ReflectedFilter, filter_spec, reflect, validate_qmf

MAX_TABLE_LEVEL = 24
# Level beyond which int64 residues are no longer needed (|k| < 2^61 assumed).
_INT_LEVEL = 62
# Arguments below this size are in the region where the builtin filters are
# flat to double precision; used to stop limit products early.
_FLAT = 2.0 ** -30


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def reduce_xi(xi):
    """xi mod 1 in [0, 1); Fractions stay exact."""
    if isinstance(xi, Fraction):
        return xi - math.floor(xi)
    x = float(xi)
    if not math.isfinite(x):
        raise DomainError("xi must be finite")
    x = x - math.floor(x)
    return 0.0 if x >= 1.0 else x


def is_exact(xi) -> bool:
    return isinstance(xi, Fraction)


def _centered_residue(k: np.ndarray, j: int) -> np.ndarray:
    if j >= _INT_LEVEL:
        return k
    half = np.int64(1) << np.int64(j - 1)
    mask = (np.int64(1) << np.int64(j)) - np.int64(1)
    return ((k + half) & mask) - half


def dyadic_factors(filt, xi, k, j: int) -> np.ndarray:
    """M((xi + k) / 2^j) for an integer array k (float xi) or exactly (Fraction xi)."""
    if is_exact(xi):
        out = np.empty(len(k), dtype=float)
        for i, kk in enumerate(k):
            kk = int(kk)
            if j < 4096:
                m = 1 << j
                kk = (kk + (m >> 1)) % m - (m >> 1)
            out[i] = filt.evaluate((xi + kk) / (1 << j))
        return out
    k = np.asarray(k, dtype=np.int64)
    kr = _centered_residue(k, j).astype(float)
    args = np.ldexp(xi + kr, -j)
    return np.asarray(filt.evaluate(args), dtype=float).reshape(k.shape)


@lru_cache(maxsize=64)
def _qmf_gate(filt) -> tuple:
    out = validate_qmf(filt, grid_n=1024, tol=1e-9)
    return out.passed, out.message


def require_qmf(filt) -> None:
    ok, msg = _qmf_gate(filt)
    if not ok:
        raise QMFError(f"filter {filt.name} fails the QMF gate at 1e-9: {msg}")


# ---------------------------------------------------------------------------
# single products
# ---------------------------------------------------------------------------

def _product(filt, eta, ell: int, N: int, log_space: bool) -> float:
    if is_exact(eta):
        vals = [filt.evaluate((eta + ell) / (1 << j)) for j in range(1, N + 1)]
    else:
        vals = [float(filt.evaluate(math.ldexp(eta + ell, -j))) for j in range(1, N + 1)]
    if any(v == 0.0 for v in vals):
        return 0.0
    if log_space:
        return math.exp(math.fsum(math.log(v) for v in vals))
    return math.prod(vals)


def q_mass(filt, xi, N: int, k: int, log_space: bool = False) -> float:
    """Q^N_xi(k) = prod_{j=1..N} M((xi + k)/2^j) for 0 <= k < 2^N."""
    if N < 0:
        raise DomainError("N must be >= 0")
    if not 0 <= k < (1 << N):
        raise DomainError(f"k = {k} outside [0, 2^{N})")
    return _product(filt, xi, int(k), N, log_space)


def reflected_q_mass(filt, eta, N: int, ell: int, log_space: bool = False) -> float:
    """Q~^N_eta(ell), the same product for the reflected filter M~(x) = M(-x).

    eta = 1 is accepted as well, since the negative branch of P^N uses
    eta = 1 - xi and xi = 0 is allowed there.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    if not 0 <= ell < (1 << N):
        raise DomainError(f"ell = {ell} outside [0, 2^{N})")
    return _product(reflect(filt), eta, int(ell), N, log_space)


def p_mass_branch(filt, xi, N: int, k: int) -> float:
    """P^N_xi(k) from the two-branch definition (positive and reflected side)."""
    xi = reduce_xi(xi)
    if not -(1 << N) <= k < (1 << N):
        raise DomainError(f"k = {k} outside [-2^{N}, 2^{N})")
    if k >= 0:
        return q_mass(filt, xi, N + 1, k)
    return reflected_q_mass(filt, 1 - xi, N + 1, -(k + 1))


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

@dataclass
class ProductMeasureTable:
    """P^N_xi(k) for -2^N <= k < 2^N, stored densely at index k + 2^N."""

    filter: object
    xi: object
    N: int
    masses: np.ndarray
    log_space: bool = False

    @property
    def offset(self) -> int:
        return 1 << self.N

    def ks(self) -> np.ndarray:
        return np.arange(-self.offset, self.offset, dtype=np.int64)

    def mass(self, k: int) -> float:
        if not -self.offset <= k < self.offset:
            raise DomainError(f"k = {k} outside [-2^{self.N}, 2^{self.N})")
        return float(self.masses[k + self.offset])

    def total(self) -> float:
        return math.fsum(self.masses)

    def tail_mass(self, n: int) -> float:
        return tail_mass(self, n)

    def retained(self, K: int) -> float:
        """Sum of masses over |k| <= K (restricted to the table range)."""
        lo = max(-K, -self.offset) + self.offset
        hi = min(K, self.offset - 1) + self.offset
        return math.fsum(self.masses[lo:hi + 1]) if hi >= lo else 0.0

    def marginal(self) -> "ProductMeasureTable":
        """Level N-1 masses obtained by summing over the two level-N children."""
        if self.N == 0:
            raise DomainError("level 0 has no parent level")
        n = self.offset
        q = n // 2
        m = self.masses
        # k in [-n, -q) has parent k + n, k in [q, n) has parent k - n
        par = m[q:n + q].copy()
        par[:q] += m[n + q:]
        par[q:] += m[:q]
        return ProductMeasureTable(self.filter, self.xi, self.N - 1, par, self.log_space)

    def to_rows(self):
        return [(int(k), float(v)) for k, v in zip(self.ks(), self.masses)]


def _xi_repr(xi):
    return str(xi) if isinstance(xi, Fraction) else float(xi)


def build_tables(filt, xi, N: int, log_space: bool = False, check_qmf: bool = True,
                 cap: int = MAX_TABLE_LEVEL) -> list:
    """All tables P^0, ..., P^N for one xi (each level reuses the previous one)."""
    if N < 0:
        raise DomainError("N must be >= 0")
    if N > cap:
        raise BudgetError(f"table level {N} exceeds the cap {cap}")
    if check_qmf:
        require_qmf(filt)
    xi = reduce_xi(xi)
    tables = []
    prev = None
    for level in range(N + 1):
        n = 1 << level
        ks = np.arange(-n, n, dtype=np.int64)
        fac = dyadic_factors(filt, xi, ks, level + 1)
        if log_space:
            with np.errstate(divide="ignore"):
                lf = np.log(fac)
        if prev is None:
            cur = lf if log_space else fac
        else:
            # parent index of k is its centered residue mod 2^level
            parent = _centered_residue(ks, level) + (n >> 1) if level > 0 else ks * 0
            cur = prev[parent] + lf if log_space else prev[parent] * fac
        prev = cur
        masses = np.exp(cur) if log_space else cur.copy()
        tables.append(ProductMeasureTable(filt, xi, level, masses, log_space))
    return tables


def p_table(filt, xi, N: int, log_space: bool = False, check_qmf: bool = True,
            cap: int = MAX_TABLE_LEVEL) -> ProductMeasureTable:
    """The table of P^N_xi over [-2^N, 2^N).  Fails fast on non-QMF filters."""
    return build_tables(filt, xi, N, log_space, check_qmf, cap)[-1]


def tail_mass(table: ProductMeasureTable, n: int) -> float:
    """Mass of {k : msb_index(k) >= n}, i.e. of k outside [-2^(n-1), 2^(n-1))."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > table.N:
        return 0.0
    off = table.offset
    h = 1 << (n - 1)
    m = table.masses
    return float(np.sum(m[:off - h]) + np.sum(m[off + h:]))


def consistency_residual(lower: ProductMeasureTable, upper: ProductMeasureTable) -> float:
    """max_k |P^N(k) - (P^{N+1}(k) + P^{N+1}(partner of k))|."""
    if upper.N != lower.N + 1:
        raise DomainError("tables must be at consecutive levels")
    return float(np.max(np.abs(upper.marginal().masses - lower.masses)))


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------

@dataclass
class LimitMassEstimate:
    k: int
    value: float
    truncation_level: int
    converged: bool
    partials: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"k": int(self.k), "value": float(self.value),
                "truncation_level": int(self.truncation_level),
                "converged": bool(self.converged)}


def _can_stop_early(filt) -> bool:
    base = filt.base if isinstance(filt, ReflectedFilter) else filt
    return getattr(base, "kind", FilterKind.SAMPLED) is not FilterKind.SAMPLED


def limit_masses(filt, xi, ks, J_max: int = 64, tol: float = 1e-12, block: int = 8):
    """Truncated products prod_{j=1..J} M((xi+k)/2^j) for many k at once.

    Returns (values, converged, levels).  ``converged`` is set when the last
    ``block`` factors multiplied the value by at least 1 - tol (or the value
    is already exactly 0).  For the builtin filters the loop stops early once
    every argument is below 2^-30 and every factor is exactly 1.0, in which
    case all remaining factors are 1.0 as well.
    """
    if J_max < 1:
        raise DomainError("J_max must be >= 1")
    xi = reduce_xi(xi)
    ks = np.asarray(ks, dtype=np.int64)
    vals = np.ones(ks.shape)
    recent = []
    early = _can_stop_early(filt)
    level = J_max
    kmax = int(np.max(np.abs(ks))) + 1 if ks.size else 1
    for j in range(1, J_max + 1):
        fac = dyadic_factors(filt, xi, ks, j)
        vals = vals * fac
        recent.append(fac)
        if len(recent) > block:
            recent.pop(0)
        if early and math.ldexp(kmax + 1, -j) < _FLAT and np.all((fac == 1.0) | (vals == 0.0)):
            level = j
            break
    if level < J_max:
        conv = np.ones(ks.shape, dtype=bool)
    else:
        ratio = np.prod(np.array(recent), axis=0)
        conv = (ratio >= 1.0 - tol) | (vals == 0.0)
    return vals, conv, level


def limit_mass(filt, xi, k: int, J_max: int = 64, tol: float = 1e-12,
               block: int = 8) -> LimitMassEstimate:
    """P_xi(k) = |hat-phi(xi + k)|^2 as a truncated infinite product.

    ``partials`` holds the running product after each factor; it is
    nonincreasing because every factor lies in [0, 1].
    """
    if J_max < 1:
        raise DomainError("J_max must be >= 1")
    xi = reduce_xi(xi)
    kk = np.array([int(k)], dtype=np.int64)
    val = 1.0
    partials = []
    facs = []
    for j in range(1, J_max + 1):
        f = float(dyadic_factors(filt, xi, kk, j)[0])
        val *= f
        partials.append(val)
        facs.append(f)
    tail = math.prod(facs[-block:])
    return LimitMassEstimate(int(k), val, J_max, bool(tail >= 1.0 - tol or val == 0.0), partials)


def phi_hat_sq(filt, theta, J_max: int = 64) -> np.ndarray:
    """|hat-phi(theta)|^2 = prod_{j=1..J} M(theta/2^j) on a float array of theta."""
    theta = np.asarray(theta, dtype=float)
    out = np.ones(theta.shape)
    for j in range(1, J_max + 1):
        out = out * np.asarray(filt.evaluate(np.ldexp(theta, -j)), dtype=float)
    return out


# ---------------------------------------------------------------------------
# emitters
# ---------------------------------------------------------------------------

def table_to_csv(table: ProductMeasureTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "mass"])
    for k, v in table.to_rows():
        w.writerow([k, repr(v)])
    return buf.getvalue()


def limit_estimates_to_json(estimates: Sequence[LimitMassEstimate], filt=None, xi=None) -> str:
    doc = {"estimates": [e.to_dict() for e in estimates]}
    if filt is not None:
        doc["filter"] = filter_spec(filt)
    if xi is not None:
        doc["xi"] = _xi_repr(xi)
    return json.dumps(doc, indent=2, sort_keys=True)
