"""Scaling exponent of the Thue-Morse product ``prod_l sin^2(pi 2^l k)``."""

from __future__ import annotations

import math
from fractions import Fraction

from ..errors import ConfigurationError

SNAP_DENOMINATOR = 10 ** 6


def as_rational(k) -> Fraction:
    """Exact rational for ``k``: ints, Fractions and strings like ``"1/3"`` are taken
    as given, floats are snapped to the nearest fraction with denominator at most
    ``10**6``."""
    if isinstance(k, (int, Fraction)):
        return Fraction(k)
    if isinstance(k, str):
        return Fraction(k.strip())
    if isinstance(k, float):
        if not math.isfinite(k):
            raise ConfigurationError(f"wave number must be finite, got {k}")
        return Fraction(k).limit_denominator(SNAP_DENOMINATOR)
    raise ConfigurationError(f"cannot interpret {k!r} as a rational number")


def luck_beta(k, N: int = 2000) -> float:
    """``(1 / (N ln 2)) sum_{l=0}^{N} ln sin^2(pi 2^l k)``.

    The doubling map is run exactly on ``k = p/q`` (``2^l p mod q``), so the orbit
    never drifts. Returns ``-inf`` when some factor vanishes, i.e. for dyadic ``k``.
    """
    if N < 1:
        raise ConfigurationError(f"N must be at least 1, got {N}")
    r = as_rational(k)
    p, q = r.numerator % r.denominator, r.denominator
    total = 0.0
    for _ in range(N + 1):
        if p == 0:
            return -math.inf
        total += math.log(math.sin(math.pi * p / q) ** 2)
        p = (2 * p) % q
    return total / (N * math.log(2))
