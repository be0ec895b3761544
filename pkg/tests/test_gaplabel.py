import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aperiodic_spectra import gaplabel as gl
from aperiodic_spectra.errors import ConfigurationError, UnsupportedError

TAU = gl.TAU
fractions = st.fractions(min_value=-20, max_value=20, max_denominator=50)


@given(fractions, fractions, fractions, fractions)
def test_qtau_arithmetic_matches_floats(a, b, c, d):
    x, y = gl.QTau(a, b), gl.QTau(c, d)
    assert float(x + y) == pytest.approx(float(x) + float(y), abs=1e-9)
    assert float(x * y) == pytest.approx(float(x) * float(y), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("text,value", [
    ("1/3", 1 / 3), ("tau", TAU), ("tau^-1", 1 / TAU), ("-1 + tau", TAU - 1),
    ("2/5*tau^2", 0.4 * TAU ** 2), ("tau^(-2)", TAU ** -2), ("3 - tau", 3 - TAU),
])
def test_parse_exact(text, value):
    assert float(gl.parse_exact(text)) == pytest.approx(value)


@pytest.mark.parametrize("text", ["", "x", "1/3 tau", "1//3"])
def test_parse_exact_rejects(text):
    with pytest.raises(ConfigurationError):
        gl.parse_exact(text)


def test_tau_identities():
    assert gl.parse_exact("tau^-1") == gl.parse_exact("-1 + tau")
    assert gl.parse_exact("tau^2") == gl.parse_exact("1 + tau")


def test_module_validation():
    with pytest.raises(ConfigurationError):
        gl.RealModule(((0.5, "1/2"), (0.25, "1/4")))        # rationally dependent
    with pytest.raises(ConfigurationError):
        gl.RealModule(((1.0, "1"),), (4,))                   # 4 is not prime
    with pytest.raises(ConfigurationError):
        gl.RealModule(((0.0, None),))
    with pytest.raises(ConfigurationError):
        gl.RealModule(((1.0, "1/2"),))                       # value contradicts descriptor
    with pytest.raises(ConfigurationError):
        gl.RealModule(((1.0, "1"),), scale="3")


def test_module_json_round_trip():
    for m in (gl.golden_module(), gl.dyadic_module(3), gl.golden_module("2pi")):
        assert gl.RealModule.from_json(json.dumps(m.to_dict())) == m


def test_scale():
    m = gl.dyadic_module(1, "2pi")
    assert m.values() == pytest.approx([2 * math.pi])


@given(st.integers(-1000, 1000), st.integers(0, 8))
def test_dyadic_membership_round_trip(a, n):
    m = gl.dyadic_module(3)
    c = Fraction(a, 2 ** n)
    got = gl.membership(float(c) / 3, m, tol=1e-9, coeff_bound=1000)
    assert got.found and got.coefficients == (c,)


@given(st.integers(-1000, 1000), st.integers(-1000, 1000))
def test_golden_membership_round_trip(a, b):
    m = gl.golden_module()
    got = gl.membership(a + b / TAU, m, tol=1e-9, coeff_bound=1000)
    assert got.found and got.coefficients == (a, b)


def test_membership_prefers_small_denominator():
    got = gl.membership(0.75, gl.dyadic_module(1), coeff_bound=64)
    assert got.coefficients == (Fraction(3, 4),)


def test_non_member_reports_bounds():
    got = gl.membership(1 / 3, gl.dyadic_module(1), tol=1e-9, coeff_bound=1000)
    assert not got
    assert got.to_dict() == {"result": "not found", "tol": 1e-9, "coeff_bound": 1000}


def test_membership_scaled_module():
    got = gl.membership(2 * math.pi * (2 + 3 / TAU), gl.golden_module("2pi"), coeff_bound=10)
    assert got.coefficients == (2, 3)


def test_membership_limits():
    m3 = gl.RealModule(((1.0, "1"), (TAU, "tau"), (math.sqrt(2), None)), (2,))
    with pytest.raises(UnsupportedError):
        gl.membership(1.0, m3)
    with pytest.raises(ConfigurationError):
        gl.membership(1.0, gl.golden_module(), tol=0)


def test_index_three():
    assert gl.subgroup_index(gl.dyadic_module(1), gl.dyadic_module(3)) == 3


@pytest.mark.parametrize("a,b,expected", [
    (gl.dyadic_module(3), gl.dyadic_module(1), "incomparable"),
    (gl.dyadic_module(1), gl.dyadic_module(1), 1),
    (gl.dyadic_module(1), gl.dyadic_module(5), 5),
    (gl.dyadic_module(1), gl.dyadic_module(15), 15),
    (gl.RealModule(((2.0, "2"),)), gl.RealModule(((1.0, "1"),)), 2),
    (gl.RealModule(((2.0, "2"),), (2,)), gl.dyadic_module(1), 1),
    (gl.RealModule(((1.0, "1"),)), gl.golden_module(), "infinite"),
    (gl.golden_module(), gl.golden_module(), 1),
    (gl.RealModule(((2.0, "2"), (TAU, "tau"))), gl.golden_module(), 2),
    (gl.RealModule(((1.0, "1"), (1 / TAU, "tau^-1")), (2,)), gl.golden_module(), "incomparable"),
    (gl.golden_module(), gl.dyadic_module(1), "incomparable"),
    (gl.dyadic_module(1, "2pi"), gl.dyadic_module(1), "incomparable"),
])
def test_subgroup_index(a, b, expected):
    assert gl.subgroup_index(a, b) == expected


@given(st.integers(1, 4), st.data())
def test_bragg_to_gap_matches_numpy_det(d, data):
    rows = [data.draw(st.lists(st.integers(-9, 9), min_size=d, max_size=d)) for _ in range(d)]
    exact = gl.bragg_to_gap_d(*rows, in_units_of_2pi=True)
    assert isinstance(exact, int)
    assert exact == round(np.linalg.det(np.array(rows, dtype=float)))


def leibniz(rows):
    """Oracle: permutation expansion of the determinant."""
    n = len(rows)
    total = Fraction(0)
    for perm in itertools.permutations(range(n)):
        sign = (-1) ** sum(perm[i] > perm[j] for i in range(n) for j in range(i + 1, n))
        term = Fraction(sign)
        for i, j in enumerate(perm):
            term *= rows[i][j]
        total += term
    return total


@given(st.integers(1, 4), st.data())
def test_bragg_to_gap_exact_for_fractions(d, data):
    rows = [data.draw(st.lists(fractions, min_size=d, max_size=d)) for _ in range(d)]
    assert gl.bragg_to_gap_d(*rows, in_units_of_2pi=True) == leibniz(rows)


@given(st.integers(2, 4), st.data())
def test_bragg_to_gap_alternating(d, data):
    rows = [data.draw(st.lists(st.integers(-9, 9), min_size=d, max_size=d)) for _ in range(d)]
    i, j = data.draw(st.permutations(range(d)))[:2]
    f = lambda r: gl.bragg_to_gap_d(*r, in_units_of_2pi=True)
    swapped = list(rows)
    swapped[i], swapped[j] = rows[j], rows[i]
    assert f(swapped) == -f(rows)
    repeated = list(rows)
    repeated[j] = rows[i]
    assert f(repeated) == 0


def test_bragg_to_gap_scaling():
    assert gl.bragg_to_gap_1d(2 * math.pi / 3) == pytest.approx(1 / 3)
    two_pi = 2 * math.pi
    assert gl.bragg_to_gap_d([two_pi, 0], [0, two_pi / 4]) == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        gl.bragg_to_gap_d([1, 2], [3])
    with pytest.raises(ConfigurationError):
        gl.bragg_to_gap_d()


def test_rescale_for_tight_binding():
    m = gl.rescale_for_tight_binding(gl.golden_module(), Fraction(1, 2))
    assert m.values() == pytest.approx([2.0, 2 / TAU])
    assert m.generators[1].exact_value() == gl.parse_exact("-2 + 2*tau")
    with pytest.raises(ConfigurationError):
        gl.rescale_for_tight_binding(m, 0)


def test_module_from_bragg():
    e_top = gl.dyadic_module(1, "2pi")
    assert gl.module_from_bragg(e_top) == gl.dyadic_module(1)
    with pytest.raises(UnsupportedError):
        gl.module_from_bragg(e_top, 2)


def test_smooth_numbers():
    assert gl.smooth_numbers([2, 3], 20) == [1, 2, 3, 4, 6, 8, 9, 12, 16, 18]
    assert gl.smooth_numbers([], 20) == [1]
