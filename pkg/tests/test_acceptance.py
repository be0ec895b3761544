"""End-to-end acceptance criteria, each at its stated tolerance.

Every criterion prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in
the terminal summary.
"""

import json

import pytest

from aperiodic_spectra import acceptance

NUMBERS = sorted(acceptance.CHECKS)


@pytest.mark.parametrize("number", NUMBERS, ids=[f"criterion_{n}" for n in NUMBERS])
def test_criterion(number, record_acceptance):
    result = acceptance.CHECKS[number]()
    record_acceptance(result.line())
    print(result.line())
    print(json.dumps(result.to_dict(), default=str)[:2000])
    assert result.passed, result.details


def test_dyadic_grid_is_dense_near_the_thue_morse_module():
    # Every m / (3 2^10) lies within 1 / (3 2^12) < 1e-4 of the grid m' / 2^12, so an
    # exact Thue-Morse label never sits farther than 1e-4 from that grid.
    worst = max(acceptance.distance_to_grid(m / 3072, 4096) for m in range(3073))
    assert worst == pytest.approx(1 / (3 * 4096))
    assert worst < 1e-4


def test_stable_thue_morse_labels_carry_factor_three():
    result = acceptance.check_selection_rule()
    labels = result.details["nearest_tm_labels"]
    assert result.details["max_distance_tm_module"] <= 1e-4
    assert result.details["labels_with_factor_3"] >= 1
    assert any(int(f.split("/")[1]) % 3 == 0 for f in labels if "/" in f)
