"""One-periodic squared-modulus filters M(xi) = |m(2 pi xi)|^2.

Every filter is stored in the one-periodic normalization: M is defined on the
real line, has period 1, takes values in [0, 1], satisfies M(0) = 1 and the
QMF identity M(xi) + M(xi + 1/2) = 1.  Only |m|^2 is represented; phase plays
no role in any of the checks built on top of this module.

Arguments are reduced to the central window [-1/2, 1/2) before a formula is
applied.  That keeps tiny negative arguments such as -1e-20 at full relative
precision, which matters for the dyadic products (xi + k) / 2^j with k < 0.

Scalar ``fractions.Fraction`` arguments are evaluated on an exact path: the
reduction and all branch/distance decisions are done in rational arithmetic
and only the final formula is taken in floating point.  Float inputs are
dyadic rationals, so a float close to 2/3 is *not* 2/3; near the log cusps of
the counterexample filter the difference is visible and exact input matters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

Real = Union[float, int, Fraction]

# Half-width of the log spikes of the counterexample filter.
CUSP_HALF_WIDTH = Fraction(1, 256)

_SIXTH = Fraction(1, 6)
_THIRD = Fraction(1, 3)


class FilterKind(str, Enum):
    HAAR = "Haar"
    SHANNON = "Shannon"
    DAUBECHIES_D4 = "DaubechiesD4"
    CUSP = "CuspCounterexample"
    PALUSZYNSKI = "Paluszynski"
    SAMPLED = "Sampled"


# Accepted spellings on the command line and in filter files.
_ALIASES = {
    "haar": FilterKind.HAAR,
    "shannon": FilterKind.SHANNON,
    "d4": FilterKind.DAUBECHIES_D4,
    "daubechies4": FilterKind.DAUBECHIES_D4,
    "daubechiesd4": FilterKind.DAUBECHIES_D4,
    "cusp": FilterKind.CUSP,
    "cuspcounterexample": FilterKind.CUSP,
    "paluszynski": FilterKind.PALUSZYNSKI,
    "sampled": FilterKind.SAMPLED,
}


class FilterSpecError(ValueError):
    """Raised for unknown filter names or malformed filter files."""


# ---------------------------------------------------------------------------
# argument reduction
# ---------------------------------------------------------------------------

def _central(x):
    """Reduce float array x modulo 1 into [-1/2, 1/2) without losing tiny values."""
    c = x - np.round(x)
    return np.where(c >= 0.5, c - 1.0, c)


def _central_exact(x: Fraction) -> Fraction:
    c = x - math.floor(x + Fraction(1, 2))
    return c


# ---------------------------------------------------------------------------
# per-kind formulas on the central window
# ---------------------------------------------------------------------------

def _haar(c):
    return np.cos(np.pi * c) ** 2


def _d4(c):
    co = np.cos(np.pi * c) ** 2
    si = np.sin(np.pi * c) ** 2
    return co * co * (1.0 + 2.0 * si)


def _shannon(c):
    return np.where((c >= -0.25) & (c < 0.25), 1.0, 0.0)


def _paluszynski(c):
    return np.where(c >= 0.0, 1.0, 0.0)


def _spike_g(d):
    """g(d) = 1 / log(e + 1/d) with g(0) = 0, elementwise on d >= 0."""
    d = np.asarray(d, dtype=float)
    pos = d > 0
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(pos, 1.0 / np.where(pos, d, 1.0), 0.0)
        out = np.where(pos, 1.0 / np.log(np.e + inv), 0.0)
    return out


_G_W = float(1.0 / math.log(math.e + 1.0 / CUSP_HALF_WIDTH))
_W = float(CUSP_HALF_WIDTH)


def _cusp_half(y):
    """The counterexample filter on [0, 1/2): a cos^2 base with two log spikes.

    The dip at 1/6 forces the zero M(1/6) = 0, the peak at 1/3 forces
    M(1/3) = 1.  Both spikes are continuous at |y - center| = w where the
    scaling factor equals 1.
    """
    base = np.cos(np.pi * y) ** 2
    d1 = np.abs(y - 1.0 / 6.0)
    d2 = np.abs(y - 1.0 / 3.0)
    dip = base * _spike_g(d1) / _G_W
    peak = 1.0 - np.sin(np.pi * y) ** 2 * _spike_g(d2) / _G_W
    out = np.where(d1 < _W, dip, base)
    return np.where(d2 < _W, peak, out)


def _cusp(c):
    # [0, 1/2) carries the defining half; [-1/2, 0) is fixed by M(x) = 1 - M(x - 1/2).
    pos = c >= 0.0
    y = np.where(pos, c, c + 0.5)
    h = _cusp_half(y)
    return np.where(pos, h, 1.0 - h)


def _g_exact(d: Fraction) -> float:
    if d == 0:
        return 0.0
    inv = 1 / d
    if inv > 2 ** 60:
        # log(e + 1/d) = log(1/d) + log1p(e*d); the second term is below 1e-17
        return 1.0 / (math.log(inv.numerator) - math.log(inv.denominator))
    return 1.0 / math.log(math.e + float(inv))


def _cusp_half_exact(y: Fraction) -> float:
    yf = float(y)
    d1 = abs(y - _SIXTH)
    d2 = abs(y - _THIRD)
    if d1 < CUSP_HALF_WIDTH:
        return math.cos(math.pi * yf) ** 2 * _g_exact(d1) / _G_W
    if d2 < CUSP_HALF_WIDTH:
        return 1.0 - math.sin(math.pi * yf) ** 2 * _g_exact(d2) / _G_W
    return math.cos(math.pi * yf) ** 2


def _cusp_exact(c: Fraction) -> float:
    if c >= 0:
        return _cusp_half_exact(c)
    return 1.0 - _cusp_half_exact(c + Fraction(1, 2))


# ---------------------------------------------------------------------------
# filter objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicFilter:
    """A one-periodic squared-modulus filter.

    ``samples`` is only used by the Sampled kind: values on the uniform grid
    j / n, j = 0..n-1, with n even, linearly interpolated with wraparound.
    """

    kind: FilterKind
    samples: Optional[tuple] = None
    smoothness_note: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind is FilterKind.SAMPLED:
            if self.samples is None:
                raise FilterSpecError("Sampled filter needs samples")
            n = len(self.samples)
            if n < 2 or n % 2:
                raise FilterSpecError(f"sample grid size must be even and >= 2, got {n}")
            arr = np.asarray(self.samples, dtype=float)
            if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
                raise FilterSpecError("sample values must lie in [0, 1]")

    @property
    def name(self) -> str:
        return self.kind.value

    def evaluate(self, xi):
        """M(xi); vectorized over float arrays, exact branch logic for a Fraction."""
        if isinstance(xi, Fraction):
            return self._evaluate_exact(xi)
        c = _central(np.asarray(xi, dtype=float))
        out = self._on_central(c)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def _on_central(self, c):
        kind = self.kind
        if kind is FilterKind.HAAR:
            return _haar(c)
        if kind is FilterKind.DAUBECHIES_D4:
            return _d4(c)
        if kind is FilterKind.SHANNON:
            return _shannon(c)
        if kind is FilterKind.PALUSZYNSKI:
            return _paluszynski(c)
        if kind is FilterKind.CUSP:
            return _cusp(c)
        return self._sampled(c)

    def _sampled(self, c):
        vals = np.asarray(self.samples, dtype=float)
        n = len(vals)
        u = np.where(c < 0.0, c + 1.0, c) * n
        i0 = np.floor(u).astype(np.int64)
        t = u - i0
        i0 = np.mod(i0, n)
        i1 = np.mod(i0 + 1, n)
        return (1.0 - t) * vals[i0] + t * vals[i1]

    def _evaluate_exact(self, xi: Fraction) -> float:
        c = _central_exact(xi)
        kind = self.kind
        if kind is FilterKind.SHANNON:
            return 1.0 if Fraction(-1, 4) <= c < Fraction(1, 4) else 0.0
        if kind is FilterKind.PALUSZYNSKI:
            return 1.0 if c >= 0 else 0.0
        if kind is FilterKind.CUSP:
            return min(1.0, max(0.0, _cusp_exact(c)))
        return float(np.clip(self._on_central(np.asarray(float(c))), 0.0, 1.0))


@dataclass(frozen=True)
class ReflectedFilter:
    """The reflected filter M~(xi) = M(-xi)."""

    base: PeriodicFilter

    @property
    def name(self) -> str:
        return f"reflected({self.base.name})"

    def evaluate(self, xi):
        if isinstance(xi, Fraction):
            return self.base.evaluate(-xi)
        return self.base.evaluate(-np.asarray(xi, dtype=float))

    __call__ = evaluate


def reflect(filt):
    """Return the reflected filter; reflecting twice gives back the base."""
    if isinstance(filt, ReflectedFilter):
        return filt.base
    return ReflectedFilter(filt)


def evaluate(filt, xi):
    """M(xi mod 1) for a filter object; see ``PeriodicFilter.evaluate``."""
    return filt.evaluate(xi)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationOutcome:
    passed: bool
    worst_xi: object
    worst_residual: float
    tol: float
    grid_n: int
    at_zero: float = 1.0
    message: str = ""

    def to_dict(self) -> dict:
        wx = self.worst_xi
        if isinstance(wx, np.ndarray):
            wx = wx.tolist()
        elif isinstance(wx, tuple):
            wx = [float(v) for v in wx]
        elif wx is not None:
            wx = float(wx)
        return {
            "passed": bool(self.passed),
            "worst_xi": wx,
            "worst_residual": float(self.worst_residual),
            "tol": float(self.tol),
            "grid_n": int(self.grid_n),
            "value_at_zero": float(self.at_zero),
            "message": self.message,
        }


def validate_qmf(filt, grid_n: int = 1024, tol: float = 1e-12) -> ValidationOutcome:
    """Check M(0) = 1 and |M(x) + M(x + 1/2) - 1| <= tol on x = j / grid_n.

    Failure is reported in the outcome, never raised.
    """
    if grid_n < 2 or grid_n % 2:
        raise ValueError("grid_n must be even and >= 2")
    xs = np.arange(grid_n, dtype=float) / grid_n
    res = np.abs(filt.evaluate(xs) + filt.evaluate(xs + 0.5) - 1.0)
    i = int(np.argmax(res))
    worst = float(res[i])
    m0 = float(filt.evaluate(0.0))
    zero_err = abs(m0 - 1.0)
    if zero_err > tol and zero_err >= worst:
        worst_xi, worst = 0.0, max(worst, zero_err)
    else:
        worst_xi = float(xs[i])
    passed = worst <= tol and zero_err <= tol
    if passed:
        msg = "QMF identity holds on the grid"
    elif zero_err > tol:
        msg = f"M(0) = {m0!r} differs from 1"
    else:
        msg = f"QMF residual {worst:.3e} at xi = {worst_xi!r}"
    return ValidationOutcome(passed, worst_xi, worst, tol, grid_n, m0, msg)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

_NOTES = {
    FilterKind.HAAR: "cos^2(pi xi); analytic",
    FilterKind.SHANNON: "indicator of [0,1/4) u [3/4,1); discontinuous at 1/4, 3/4",
    FilterKind.DAUBECHIES_D4: "cos^4(pi xi)(1 + 2 sin^2(pi xi)); analytic",
    FilterKind.CUSP: "cos^2 base with log cusps at 1/6, 1/3 (and 2/3, 5/6); "
                     "zeros exactly at 1/6, 1/2, 5/6; value 1 at 0, 1/3, 2/3",
    FilterKind.PALUSZYNSKI: "indicator of [0,1/2); scale function hat-phi = chi_[0,1)",
}


def builtin(kind) -> PeriodicFilter:
    """One of the built-in filters, by FilterKind or by (alias) name."""
    if not isinstance(kind, FilterKind):
        key = str(kind).strip().lower().replace("-", "").replace("_", "")
        if key not in _ALIASES:
            raise FilterSpecError(f"unknown filter {kind!r}")
        kind = _ALIASES[key]
    if kind is FilterKind.SAMPLED:
        raise FilterSpecError("Sampled is not a builtin; use sampled(values)")
    return PeriodicFilter(kind, None, _NOTES[kind])


def builtin_names() -> list:
    return ["haar", "shannon", "d4", "cusp", "paluszynski"]


def sampled(values: Sequence[float], symmetrize: bool = False, note: str = "") -> PeriodicFilter:
    """A filter from samples on j / n.  With ``symmetrize`` the second half is
    overwritten by 1 - (first half), which makes the QMF identity exact."""
    vals = [float(v) for v in values]
    n = len(vals)
    if symmetrize:
        if n < 2 or n % 2:
            raise FilterSpecError(f"sample grid size must be even and >= 2, got {n}")
        half = n // 2
        vals = vals[:half] + [1.0 - v for v in vals[:half]]
    return PeriodicFilter(FilterKind.SAMPLED, tuple(vals), note or "sampled, linear interpolation")


def load_filter(spec: str) -> PeriodicFilter:
    """Resolve a builtin name or a JSON filter file {"kind", "samples", "symmetrize"}."""
    key = spec.strip().lower().replace("-", "").replace("_", "")
    if key in _ALIASES and _ALIASES[key] is not FilterKind.SAMPLED:
        return builtin(_ALIASES[key])
    path = Path(spec)
    if not path.is_file():
        raise FilterSpecError(f"unknown filter {spec!r} (not a builtin name or a file)")
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FilterSpecError(f"cannot read filter file {spec}: {exc}") from exc
    if not isinstance(data, dict) or "kind" not in data:
        raise FilterSpecError("filter file must be an object with a 'kind' field")
    kind = str(data["kind"]).strip().lower().replace("-", "").replace("_", "")
    if kind not in _ALIASES:
        raise FilterSpecError(f"unknown filter kind {data['kind']!r}")
    if _ALIASES[kind] is not FilterKind.SAMPLED:
        return builtin(_ALIASES[kind])
    samples = data.get("samples")
    if not isinstance(samples, list) or not samples:
        raise FilterSpecError("Sampled filter file needs a non-empty 'samples' list")
    return sampled(samples, bool(data.get("symmetrize", False)), note=f"sampled from {path.name}")


def filter_spec(filt) -> dict:
    """JSON-ready description of a filter, the inverse of ``load_filter``."""
    if isinstance(filt, ReflectedFilter):
        return {"reflected": filter_spec(filt.base)}
    out = {"kind": filt.kind.value}
    if filt.samples is not None:
        out["samples"] = list(filt.samples)
    return out
