"""Small-integer primality helpers used for filter dimension selection.

Dimensions stay well below 2**32, so deterministic trial division is
plenty; depending on a CAS library for this would dominate import time.
"""

from __future__ import annotations

import math


def is_prime(x: int) -> bool:
    if x < 2:
        return False
    if x < 4:
        return True
    if x % 2 == 0:
        return False
    for d in range(3, math.isqrt(x) + 1, 2):
        if x % d == 0:
            return False
    return True


def prev_prime(x: int) -> int:
    """Largest prime strictly below ``x``. Requires ``x >= 3``."""
    if x <= 2:
        raise ValueError(f"no prime below {x}")
    c = x - 1
    while not is_prime(c):
        c -= 1
    return c


def next_prime(x: int) -> int:
    """Smallest prime strictly above ``x``."""
    c = x + 1
    while not is_prime(c):
        c += 1
    return c
