"""Independent reference values, computed without the package.

Frozen numbers were produced by closed forms or brute force and are kept as
literals so a regression in the package cannot move them.
"""

import math


def haar_limit(x: float) -> float:
    """|hat-phi(x)|^2 for the Haar scale function: sinc^2."""
    if x == 0:
        return 1.0
    return (math.sin(math.pi * x) / (math.pi * x)) ** 2


def haar_M(x: float) -> float:
    return math.cos(math.pi * x) ** 2


def brute_product(M, xi, k, factors):
    out = 1.0
    for j in range(1, factors + 1):
        out *= M((xi + k) / 2 ** j)
    return out


def brute_code(k: int):
    """Signed dyadic code of k by repeated halving (no bit tricks)."""
    if k >= 0:
        sign, m = 0, k
    else:
        sign, m = 1, -k - 1
    digits = []
    while m > 0:
        digits.append(m % 2)
        m = m // 2
    return sign, tuple(digits)


# Haar, xi = 1/2, k = 0: prod cos^2(pi/2^(j+1)) = (2/pi)^2
HAAR_HALF_LIMIT = 0.40528473456935108578
# Haar table at xi = 1/3, N = 3, k = 0 (closed form product of 4 cos^2 factors)
HAAR_THIRD_N3_K0 = math.prod(math.cos(math.pi / 3 / 2 ** j) ** 2 for j in range(1, 5))
# digit set of B = [[4]] and the two frozen expansions
DIGITS_B4 = [-1, 0, 1, 2]
EXPAND_5 = (1, 1)
EXPAND_MINUS_3 = (1, -1)
