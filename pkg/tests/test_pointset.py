import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aperiodic_spectra.errors import ConfigurationError, WindowError
from aperiodic_spectra.pointset import (DecoratedPointSet, density, distinct_patch_count,
                                        from_substitution, from_word, matching_pairs, patch_at,
                                        patches_equal, weights)
from aperiodic_spectra.presets import TM_BAR, fibonacci, thue_morse
from aperiodic_spectra.substitution import Substitution, iterate

TAU = (1 + math.sqrt(5)) / 2
FIB = fibonacci().substitution
TM = thue_morse().substitution


def factors(text, n):
    return {text[i:i + n] for i in range(len(text) - n + 1)}


def test_unit_lattice_density():
    ps = from_word(np.zeros(4096, dtype=int), [1.0])
    assert density(ps).value == 1.0


def test_fibonacci_tiles_density():
    sub = Substitution(("a", "b"), FIB.rules, {"a": TAU, "b": 1.0})
    ps = from_substitution(sub, 24)
    assert density(ps).value == pytest.approx(1 / (TAU / TAU + 1 / TAU ** 2), abs=1e-4)


def test_periodic_word_density():
    ps = from_word(np.tile([0, 1], 2048), [2.0, 2.0], 2048, ("a", "b"))
    assert density(ps).value == 0.5


def test_two_sided_thue_morse_origin():
    ps = from_substitution(TM, 6)
    i0 = int(np.searchsorted(ps.positions, 0.0))
    assert ps.positions[i0] == 0.0
    # mirror completion: site -1 repeats site 0
    assert ps.symbols[i0 - 1] == ps.symbols[i0] == 0
    assert ps.window == (-64.0, 64.0)


def test_one_sided_word_is_centered():
    ps = from_substitution(FIB, 10)
    assert ps.positions[len(ps) // 2] == 0.0


@pytest.mark.parametrize("R", [1, 2, 3, 5, 8])
def test_sturmian_patch_count(R):
    # radius-R patches on the unit lattice are factors of length 2R + 1
    assert distinct_patch_count(from_substitution(FIB, 20), R) == 2 * R + 2


@pytest.mark.parametrize("R", [1, 2, 3, 4, 6])
def test_thue_morse_patch_count_matches_factor_count(R):
    text = "".join("ab"[i] for i in iterate(TM, 16))
    ps = from_substitution(TM, 16)
    assert distinct_patch_count(ps, R) == len(factors(text, 2 * R + 1))


@given(st.integers(1, 40), st.integers(0, 3))
def test_matching_pairs_carry_equal_patches(R, seed):
    ps = from_substitution(FIB, 16)
    pairs = matching_pairs(ps, R, max_pairs=32, seed=seed)
    assert len(pairs) > 0
    for x, y in pairs:
        assert x < y
        assert patches_equal(patch_at(ps, x, R), patch_at(ps, y, R))


def test_matching_pairs_prefix_property():
    ps = from_substitution(TM, 12)
    small = matching_pairs(ps, 8, max_pairs=16)
    large = matching_pairs(ps, 8, max_pairs=64)
    assert np.array_equal(small, large[:len(small)])


def test_patch_offsets_and_symbols():
    ps = from_word([0, 1, 1, 0, 1], [1.0, 1.0], 2, ("a", "b"))
    p = patch_at(ps, 0.0, 1.0)
    assert p.offsets.tolist() == [-1.0, 0.0, 1.0]
    assert p.symbols.tolist() == [1, 1, 0]


def test_patch_outside_window():
    ps = from_word([0, 1, 1, 0, 1], [1.0, 1.0], 2)
    with pytest.raises(WindowError):
        patch_at(ps, 0.0, 2.5)
    with pytest.raises(WindowError):
        patch_at(ps, 0.0, 3.0)       # the window [-2, 3) is half-open


def test_weights_from_letters():
    ps = from_substitution(TM, 3)
    w = weights(ps, {"1": 1.0, TM_BAR: -1.0})
    assert np.array_equal(w, np.where(ps.symbols == 0, 1.0, -1.0))
    with pytest.raises(ConfigurationError):
        weights(ps, {"1": 1.0})


@pytest.mark.parametrize("args", [
    (np.array([0.0, 0.0]), np.array([0, 0]), ("a",), (0.0, 1.0)),
    (np.array([0.0, 1.0]), np.array([0, 2]), ("a", "b"), (0.0, 2.0)),
    (np.array([0.0, 1.0]), np.array([0, 1]), ("a", "b"), (0.5, 2.0)),
])
def test_invalid_point_sets(args):
    with pytest.raises(ConfigurationError):
        DecoratedPointSet(*args)
