"""Signed dyadic codes: the embedding of Z into {0,1} x {0,1}^N.

A nonnegative integer k is written as (0; w1, w2, ...) with
k = sum w_i 2^(i-1), least significant digit first.  A negative k is written
as (1; digits of -(k+1)), so -1 is (1; ) and -2 is (1; 1).  Trailing zeros are
trimmed, which makes equality of codes structural.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SignedDyadicCode:
    sign_slot: int
    digits: tuple = ()

    def __post_init__(self):
        if self.sign_slot not in (0, 1):
            raise ValueError("sign_slot must be 0 or 1")
        if any(b not in (0, 1) for b in self.digits):
            raise ValueError("digits must be bits")
        if self.digits and self.digits[-1] == 0:
            raise ValueError("code is not canonical: trailing zero digit")

    def bit(self, i: int) -> int:
        """omega_i; i = 0 is the sign slot, i >= 1 the dyadic digits."""
        if i == 0:
            return self.sign_slot
        return self.digits[i - 1] if i <= len(self.digits) else 0

    def __str__(self):
        return f"({self.sign_slot};{','.join(map(str, self.digits))})"


@dataclass(frozen=True)
class CylinderIndex:
    """The level-N cylinder {omega : omega_i = code_i, 0 <= i <= N}."""

    N: int
    sign_slot: int
    digits: tuple

    def contains(self, k: int) -> bool:
        code = encode(k)
        return code.sign_slot == self.sign_slot and all(
            code.bit(i + 1) == b for i, b in enumerate(self.digits))


def encode(k: int) -> SignedDyadicCode:
    k = int(k)
    sign = 0 if k >= 0 else 1
    m = k if k >= 0 else -(k + 1)
    digits = []
    while m:
        digits.append(m & 1)
        m >>= 1
    return SignedDyadicCode(sign, tuple(digits))


def decode(code: SignedDyadicCode) -> int:
    m = 0
    for i, b in enumerate(code.digits):
        m |= b << i
    return m if code.sign_slot == 0 else -(m + 1)


def msb_index(k: int) -> int:
    """Largest i >= 1 with omega_i(k) = 1, or 0 for k in {0, -1}."""
    k = int(k)
    return (k if k >= 0 else -(k + 1)).bit_length()


def cylinder(k: int, N: int) -> CylinderIndex:
    """The level-N cylinder containing the code of k (sign slot plus N digits)."""
    if N < 0:
        raise ValueError("N must be >= 0")
    code = encode(k)
    return CylinderIndex(N, code.sign_slot, tuple(code.bit(i) for i in range(1, N + 1)))
