import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aperiodic_spectra import diffraction as dif
from aperiodic_spectra.errors import ConfigurationError
from aperiodic_spectra.pointset import from_substitution, from_word, weights
from aperiodic_spectra.presets import period_doubling, thue_morse
from aperiodic_spectra.spectra.luck import luck_beta

TM = thue_morse()
TM_PS = from_substitution(TM.substitution, 14)
TM_W = weights(TM_PS, TM.weights)


def direct_amplitude(ps, w, k, L, center=0.0):
    """Oracle: explicit loop over the points of [c - L, c + L)."""
    total = 0j
    for x, wx in zip(ps.positions, w):
        if center - L <= x < center + L:
            total += wx * complex(math.cos(k * x), -math.sin(k * x))
    return total / (2 * L)


@given(st.floats(0.0, 2 * math.pi), st.sampled_from([16.0, 100.5, 1024.0]), st.floats(-50, 50))
def test_amplitude_matches_direct_sum(k, L, center):
    got = dif.bt_amplitude(TM_PS, TM_W, k, L, center)
    assert abs(got - direct_amplitude(TM_PS, TM_W, k, L, center)) < 1e-12


def test_amplitude_series_matches_single_windows():
    Ls = [8.0, 64.0, 512.0, 4096.0]
    series = dif.amplitude_series(TM_PS, TM_W, 1.3, Ls)
    assert series == pytest.approx([dif.bt_amplitude(TM_PS, TM_W, 1.3, L) for L in Ls], abs=1e-14)


def test_lattice_bragg_peak():
    ps = from_word(np.zeros(8192, dtype=int), [1.0], 4096)
    w = np.ones(len(ps))
    (res,) = dif.peak_scan(ps, w, [2 * math.pi], [64.0, 256.0, 1024.0, 4096.0])
    assert res.verdict == "bragg"
    assert res.intensity == pytest.approx(1.0)


def test_thue_morse_sign_weights_have_no_bragg_peaks():
    ks = [2 * math.pi / 3, math.pi, math.pi / 2, 1.0]
    results = dif.peak_scan(TM_PS, TM_W, ks, [2.0 ** j for j in range(6, 13)])
    assert [r.verdict for r in results] == ["decaying"] * 4


def test_period_doubling_bragg_peaks():
    p = period_doubling()
    ps = p.point_set(14)
    w = weights(ps, p.weights)
    ks = [math.pi, math.pi / 2, 2 * math.pi / 3]
    verdicts = [r.verdict for r in dif.peak_scan(ps, w, ks, [2.0 ** j for j in range(6, 13)])]
    assert verdicts == ["bragg", "bragg", "decaying"]


def test_decay_matches_luck_exponent():
    ps = from_substitution(TM.substitution, 15)
    w = weights(ps, TM.weights)
    slope = dif.decay_exponent(ps, w, 2 * math.pi / 3, [2.0 ** j for j in range(7, 16)])
    assert abs(slope - luck_beta(Fraction(1, 3))) < 0.05


def test_classify_synthetic_samples():
    L = np.array([64.0, 128.0, 256.0, 512.0])
    flat = dif.DiffractionSample(1.0, L, np.full(4, 0.3 + 0j))
    assert dif.classify(flat).verdict == "bragg"
    falling = dif.DiffractionSample(1.0, L, np.sqrt(L ** -1.0) * 1e-2)
    res = dif.classify(falling)
    assert res.verdict == "decaying" and res.slope == pytest.approx(-1.0)
    noisy = dif.DiffractionSample(1.0, L, np.sqrt(np.array([1e-4, 1e-9, 1e-4, 1e-9])))
    assert dif.classify(noisy).verdict == "undecided"


def test_window_schedule_checks():
    with pytest.raises(ConfigurationError):
        dif.peak_scan(TM_PS, TM_W, [1.0], [8.0, 16.0])
    with pytest.raises(ConfigurationError):
        dif.peak_scan(TM_PS, TM_W, [1.0], [8.0, 32.0, 16.0])


def test_autocorrelation_of_lattice():
    ps = from_word(np.zeros(4096, dtype=int), [1.0], 2048)
    table = dif.autocorrelation(ps, np.ones(len(ps)), 1024.0, 5.0)
    assert table[0.0] == pytest.approx(1.0)
    assert table[3.0] == pytest.approx(1.0 - 3 / 2048)
    assert 0.5 not in table


@given(st.floats(0.1, 3.0))
def test_autocorrelation_is_hermitian(z_max):
    table = dif.autocorrelation(TM_PS, TM_W, 512.0, z_max)
    for z, g in zip(table.displacements, table.coefficients):
        assert table[-z] == pytest.approx(np.conj(g))


def test_thue_morse_autocorrelation_values():
    # gamma(1) = -1/3 for the balanced Thue-Morse weights (1 - 2 * freq of unequal neighbours)
    table = dif.autocorrelation(TM_PS, TM_W, 4096.0, 2.0)
    assert table[1.0].real == pytest.approx(-1 / 3, abs=2e-3)


def test_wiener_average_of_lattice():
    ps = from_word(np.zeros(4096, dtype=int), [1.0], 2048)
    table = dif.autocorrelation(ps, np.ones(len(ps)), 1024.0, 256.0)
    # gamma(z) = 1 - |z| / 2048 on the finite window; Cesaro mean over |z| <= 256
    expected = sum(1 - abs(z) / 2048 for z in range(-256, 257)) / 512
    assert table.wiener_average(2 * math.pi).real == pytest.approx(expected, abs=1e-9)


def test_csv_and_json_outputs(tmp_path):
    import io
    import json
    sample = dif.diffraction_sample(TM_PS, TM_W, 1.0, [8.0, 16.0, 32.0])
    buf = io.StringIO()
    dif.write_samples_csv(buf, [sample])
    lines = buf.getvalue().splitlines()
    assert len(lines) == 4
    peaks = json.loads(dif.peaks_json(dif.peak_scan(TM_PS, TM_W, [1.0], [8.0, 16.0, 32.0])))
    assert peaks[0]["k"] == 1.0 and "verdict" in peaks[0]
