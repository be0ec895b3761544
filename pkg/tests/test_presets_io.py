import math

import pytest

from aperiodic_spectra.errors import ConfigurationError
from aperiodic_spectra.io import clean, dumps, fmt, parse_list, parse_mapping, parse_real
from aperiodic_spectra.presets import TM_BAR, get_preset
from aperiodic_spectra.substitution import iterate


@pytest.mark.parametrize("name", ["thue-morse", "fibonacci", "period-doubling", "periodic:5"])
def test_presets_build(name):
    p = get_preset(name)
    model = p.model(0.7)
    assert model.coupling == 0.7
    ps = p.point_set(6)
    expected = len(iterate(p.substitution, 6)) if p.substitution else 2 ** 6
    if p.substitution is not None and p.substitution.mirror_completion:
        expected *= 2
    assert len(ps) == expected


def test_thue_morse_preset_symbols():
    p = get_preset("thue-morse")
    assert p.substitution.alphabet == ("1", TM_BAR)
    assert p.substitution.mirror_completion


def test_periodic_potential():
    p = get_preset("periodic:4")
    assert [p.potential[str(i)] for i in range(4)] == pytest.approx([1, 0, -1, 0], abs=1e-15)


@pytest.mark.parametrize("name", ["penrose", "periodic:x", "periodic:0"])
def test_unknown_presets(name):
    with pytest.raises(ConfigurationError):
        get_preset(name)


def test_number_parsing():
    assert parse_real("2*pi/3") == pytest.approx(2 * math.pi / 3)
    assert parse_real("1/tau") == pytest.approx(2 / (1 + math.sqrt(5)))
    assert parse_real(-2) == -2.0
    for bad in ("__import__('os')", "1/0", "pi pi", "x"):
        with pytest.raises(ConfigurationError):
            parse_real(bad)


def test_list_and_mapping_parsing():
    assert parse_list("6:9", int) == [6, 7, 8, 9]
    assert parse_list("pi, 1") == pytest.approx([math.pi, 1.0])
    assert parse_list([1, "2"]) == [1.0, 2.0]
    assert parse_list("") == [] and parse_list(None) == []
    assert parse_mapping("a=1, b=-1") == {"a": 1.0, "b": -1.0}
    with pytest.raises(ConfigurationError):
        parse_mapping("a:1")


def test_formatting():
    assert fmt(-math.inf) == "-inf"
    assert fmt(1 / 3) == "0.333333333333"
    assert clean({"x": -math.inf, "y": [1 / 3, 2], "z": (True,)}) == {"x": "-inf", "y": [0.333333333333, 2], "z": [True]}
    assert dumps({"s": TM_BAR}).count(TM_BAR) == 1
