import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aperiodic_spectra.errors import ConfigurationError
from aperiodic_spectra.presets import fibonacci, periodic, thue_morse
from aperiodic_spectra.spectra import bands
from aperiodic_spectra.spectra.tightbinding import TightBindingModel, ids

TAU = (1 + math.sqrt(5)) / 2


def bloch_bands(diag, n_q=401):
    """Oracle: band ranges from the Bloch Hamiltonian sampled on a q grid that
    contains 0 and pi, where 1D band edges sit."""
    p = len(diag)
    levels = []
    for q in np.linspace(0, np.pi, n_q):
        H = np.diag(diag).astype(complex)
        for i in range(p - 1):
            H[i, i + 1] = H[i + 1, i] = 1.0
        if p == 1:
            H[0, 0] += 2 * np.cos(q)
        else:
            H[0, p - 1] += np.exp(-1j * q)
            H[p - 1, 0] += np.exp(1j * q)
        levels.append(np.linalg.eigvalsh(H))
    levels = np.array(levels)
    return levels.min(axis=0), levels.max(axis=0)


def two_letter_model(lam):
    return TightBindingModel({"a": 1.0, "b": -1.0}, lam, word=("a", "b"))


@given(st.floats(0.05, 3.0))
def test_period_two_gap(lam):
    rep = bands.band_structure(two_letter_model(lam), 0)
    (gap,) = rep.gaps
    assert gap.e_low == pytest.approx(-2 - lam, abs=1e-9)
    assert gap.e_high == pytest.approx(-2 + lam, abs=1e-9)
    assert gap.label == 0.5


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=9))
def test_band_edges_match_bloch_oracle(values):
    word = tuple(str(i) for i in range(len(values)))
    model = TightBindingModel(dict(zip(word, values)), 1.0, word=word)
    rep = bands.band_structure(model, 0)
    lo, hi = bloch_bands(model.diagonal(model.approximant_letters(0)))
    got = np.array([(b.e_low, b.e_high) for b in rep.bands])
    assert len(got) == len(values)
    assert np.allclose(got[:, 0], lo, atol=1e-8)
    assert np.allclose(got[:, 1], hi, atol=1e-8)


def test_labels_count_bands_below():
    rep = bands.band_structure(thue_morse().model(1.0), 5)
    p = 32
    for g in rep.gaps:
        assert g.label * p == g.bands_below
        # Sturm count on several periods confirms the label
        model = thue_morse().model(1.0)
        diag = np.tile(model.diagonal(model.approximant_letters(5)), 8)
        from aperiodic_spectra.spectra.tightbinding import sturm_count_diag
        assert sturm_count_diag(diag, g.midpoint) / (8 * p) == pytest.approx(g.label, abs=1 / (8 * p))


def test_grid_method_agrees_with_floquet():
    model = thue_morse().model(1.0)
    a = bands.band_structure(model, 6)
    b = bands.band_structure(model, 6, method="grid")
    assert len(a.gaps) == len(b.gaps)
    for x, y in zip(a.gaps, b.gaps):
        assert x.label == y.label
        assert x.e_low == pytest.approx(y.e_low, abs=1e-9)
        assert x.e_high == pytest.approx(y.e_high, abs=1e-9)


def test_zero_coupling_has_no_gaps():
    assert bands.band_structure(thue_morse().model(0.0), 6).gaps == []


def test_unknown_method():
    with pytest.raises(ConfigurationError):
        bands.band_structure(thue_morse().model(1.0), 3, method="magic")


def test_periodic_preset_labels():
    rep = bands.band_structure(periodic(3).model(1.0), 0)
    assert [g.label for g in rep.gaps] == pytest.approx([1 / 3, 2 / 3])


@pytest.fixture(scope="module")
def tm_report():
    return bands.aperiodic_gap_labels(thue_morse().model(1.0), [6, 7, 8], tol=1e-4, window=2 ** 14)


def test_thue_morse_stable_labels_lie_in_module(tm_report):
    stable = tm_report.stable_gaps()
    assert len(stable) >= 5
    for g in stable:
        assert abs(g.label * 3 * 2 ** 8 - round(g.label * 3 * 2 ** 8)) < 1e-4 * 3 * 2 ** 8


def test_aperiodic_labels_are_sturm_values(tm_report):
    model = thue_morse().model(1.0)
    for g in tm_report.stable_gaps():
        assert g.label == pytest.approx(float(ids(model, g.midpoint, 2 ** 14)), abs=1e-12)


def test_reported_gaps_are_ordered(tm_report):
    lows = [g.e_low for g in tm_report.gaps]
    assert lows == sorted(lows)
    assert all(g.width >= 1e-3 for g in tm_report.gaps)


def test_unstable_gaps_explain_themselves(tm_report):
    assert all(g.note for g in tm_report.gaps if not g.stable)


def test_fibonacci_labels_in_golden_module():
    rep = bands.aperiodic_gap_labels(fibonacci().model(1.0), [7, 8, 9, 10], tol=1e-4,
                                     window=2 ** 14, min_width=1e-2)
    stable = rep.stable_gaps()
    assert len(stable) >= 10
    for g in stable:
        # brute-force search for m + n / tau with |m|, |n| <= 20
        best = min(abs(m + n / TAU - g.label) for m in range(-20, 21) for n in range(-20, 21))
        assert best < 2e-4


def test_labels_stable_over_coupling():
    tracked = bands.gap_labels_over_coupling(thue_morse().model(1.0), (0.9, 1.0, 1.1), 1.0, 6,
                                             window=2 ** 12)
    assert tracked
    for per_coupling in tracked.values():
        assert set(per_coupling) == {0.9, 1.0, 1.1}
        assert max(per_coupling.values()) - min(per_coupling.values()) < 1e-9


def test_report_outputs():
    rep = bands.band_structure(two_letter_model(1.0), 0)
    data = json.loads(rep.to_json())
    assert set(data["gaps"][0]) == {"e_low", "e_high", "label", "order", "stable"}
    buf = io.StringIO()
    rep.write_bands_csv(buf)
    assert buf.getvalue().splitlines()[0] == "order,band_index,e_low,e_high"
    with pytest.raises(ValueError):
        bands.GapReport([bands.Gap(0.0, 1.0, 0.5, 0), bands.Gap(0.5, 2.0, 0.6, 0)])


def test_discriminant_at_band_edges():
    diag = two_letter_model(1.0).diagonal(np.array([0, 1]))
    edges = bands.floquet_edges(diag)
    assert bands.discriminant(diag, edges) == pytest.approx(np.zeros(len(edges)), abs=1e-8)
