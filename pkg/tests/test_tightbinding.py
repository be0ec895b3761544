import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aperiodic_spectra.errors import ConfigurationError
from aperiodic_spectra.presets import TM_BAR, fibonacci, thue_morse
from aperiodic_spectra.spectra import tightbinding as tb

finite = st.floats(-4, 4, allow_nan=False)


def hamiltonian(diag):
    n = len(diag)
    return np.diag(diag) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)


def naive_product(diag, E):
    T = np.eye(2)
    for d in diag:
        T = np.array([[E - d, -1.0], [1.0, 0.0]]) @ T
    return T


@given(st.lists(finite, min_size=1, max_size=12), st.lists(finite, min_size=1, max_size=20))
def test_sturm_count_matches_eigvalsh(diag, energies):
    diag = np.array(diag)
    E = np.array(energies) * 1.7 + 0.0123
    ev = np.linalg.eigvalsh(hamiltonian(diag))
    want = np.array([np.sum(ev < e) for e in E])
    got = tb.sturm_count_diag(diag, E)
    close = np.min(np.abs(ev[:, None] - E[None, :]), axis=0) < 1e-9
    assert np.array_equal(got[~close], want[~close])


@given(st.lists(finite, min_size=1, max_size=30), finite)
def test_transfer_product_matches_naive(diag, E):
    diag = np.array(diag)
    T = tb.transfer_product_diag(diag, E)
    want = naive_product(diag, E)
    assert T.matrix() == pytest.approx(want, rel=1e-9, abs=1e-9 * np.abs(want).max())
    assert T.det() == pytest.approx(1.0, abs=1e-12)
    assert T.trace() == pytest.approx(np.trace(want), abs=1e-9 * np.abs(want).max())


@pytest.mark.parametrize("L", [10, 1000, 10 ** 5])
def test_unimodular_for_long_products(L):
    model = thue_morse().model(1.0)
    for E in (-5.0, -2.0, 0.3):
        assert abs(tb.transfer_product(model, E, 0, L).det() - 1) < 1e-9


def test_letters_two_sided_mirror():
    model = thue_morse().model()
    right = model.letters(0, 16)
    left = model.letters(-16, 0)
    assert np.array_equal(left[::-1], right)


def test_periodic_word_repeats():
    model = tb.TightBindingModel({"x": 0.0, "y": 1.0}, word=("x", "y", "y"))
    assert model.letters(-3, 6).tolist() == [0, 1, 1] * 3


def test_diagonal_convention():
    model = thue_morse().model(0.5)
    letters = model.letters(0, 4)
    assert model.diagonal(letters).tolist() == [-1.5, -2.5, -2.5, -1.5]


def test_one_sided_word_has_no_negative_sites():
    with pytest.raises(ConfigurationError):
        fibonacci().model().letters(-1, 3)


def test_window_letters_centering():
    assert len(thue_morse().model().window_letters(10)) == 10
    fib = fibonacci().model()
    assert np.array_equal(fib.window_letters(8), fib.letters(0, 8))


@pytest.mark.parametrize("kwargs", [
    dict(potential_map={"a": 1.0}),
    dict(potential_map={"1": 1.0}, substitution=thue_morse().substitution),
    dict(potential_map={"1": 1.0, TM_BAR: math.inf}, substitution=thue_morse().substitution),
    dict(potential_map={"a": 0.0}, word=()),
])
def test_invalid_models(kwargs):
    with pytest.raises(ConfigurationError):
        tb.TightBindingModel(**kwargs)


def test_free_chain_ids():
    # lambda = 0: E = -2 + 2 cos q, so the IDS is 1 - arccos((E + 2) / 2) / pi
    model = thue_morse().model(0.0)
    E = np.array([-3.5, -2.0, -1.0, -0.2])
    want = 1 - np.arccos((E + 2) / 2) / np.pi
    got = tb.ids(model, E, 2 ** 14)
    assert got == pytest.approx(want, abs=2e-4)


@given(st.floats(-1.5, 1.5))
def test_ids_is_monotone_with_endpoints(coupling):
    model = fibonacci().model(coupling)
    E = np.linspace(-5, 1, 200)
    v = tb.ids(model, E, 2048)
    assert np.all(np.diff(v) >= 0)
    assert v[0] == 0.0 and v[-1] == 1.0


def test_lyapunov_free_chain_and_gap():
    model = thue_morse().model(0.0)
    assert tb.lyapunov_exponent(model, -2.0, 10 ** 4) < 1e-3
    # outside the band the growth rate is arccosh(|E + 2| / 2)
    assert tb.lyapunov_exponent(model, 1.0, 10 ** 4) == pytest.approx(math.acosh(1.5), abs=1e-3)


def test_lyapunov_needs_length():
    with pytest.raises(ConfigurationError):
        tb.lyapunov_estimate(thue_morse().model(), 0.0, 100)
