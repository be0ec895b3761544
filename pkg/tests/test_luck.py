import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from aperiodic_spectra.errors import ConfigurationError
from aperiodic_spectra.spectra.luck import as_rational, luck_beta


def direct_beta(p, q, N):
    """Oracle: the defining sum with the orbit 2^l p / q computed exactly by pow()."""
    return sum(math.log2(math.sin(math.pi * (pow(2, l, q) * p % q) / q) ** 2)
               for l in range(N + 1)) / N


def test_one_third_closed_form():
    # 2^l / 3 mod 1 alternates between 1/3 and 2/3, where sin^2 = 3/4
    assert luck_beta(Fraction(1, 3), 2000) == pytest.approx(2001 / 2000 * math.log2(3 / 4), abs=1e-12)
    assert luck_beta(Fraction(1, 3), 2000) == pytest.approx(-0.415037, abs=1e-3)


def test_one_fifth_closed_form():
    # the orbit cycles through all of 1/5 .. 4/5 and prod sin(j pi / 5) = 5 / 16
    # N = 2000 sums 2001 terms: 500 full cycles of four plus the term at 1/5
    exact = (500 * 2 * math.log2(5 / 16) + math.log2(math.sin(math.pi / 5) ** 2)) / 2000
    assert luck_beta(Fraction(1, 5), 2000) == pytest.approx(exact, abs=1e-12)
    assert luck_beta(Fraction(1, 5), 2000) == pytest.approx(0.5 * math.log2(5 / 16), abs=1e-3)


@given(st.integers(3, 400).filter(lambda q: q % 2), st.data())
def test_matches_direct_sum(q, data):
    p = data.draw(st.integers(1, q - 1).filter(lambda p: math.gcd(p, q) == 1))
    assert luck_beta(Fraction(p, q), 300) == pytest.approx(direct_beta(p, q, 300), abs=1e-9)


@given(st.fractions(min_value=-3, max_value=3, max_denominator=999))
def test_symmetries(k):
    b = luck_beta(k, 200)
    assert b == luck_beta(k + 1, 200)
    assert b == pytest.approx(luck_beta(-k, 200), abs=1e-12)
    assert b <= 0


@pytest.mark.parametrize("k", [0, Fraction(1, 2), Fraction(3, 8), "5/16"])
def test_dyadic_rationals_vanish(k):
    assert luck_beta(k) == -math.inf


def test_float_input_is_snapped():
    assert as_rational(1 / 3) == Fraction(1, 3)
    assert luck_beta(1 / 3) == luck_beta(Fraction(1, 3))
    assert as_rational("2/6") == Fraction(1, 3)


@pytest.mark.parametrize("bad", [math.inf, None, [1]])
def test_bad_inputs(bad):
    with pytest.raises(ConfigurationError):
        luck_beta(bad)


def test_needs_positive_n():
    with pytest.raises(ConfigurationError):
        luck_beta(Fraction(1, 3), 0)
