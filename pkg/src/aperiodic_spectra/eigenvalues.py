"""Numerical test for topological eigenvalues.

A wave number ``k`` is a topological eigenvalue when the plane wave ``e^{ikx}`` is
(asymptotically) determined by local patches: if the R-patches around ``x`` and
``y`` coincide then ``e^{ik(x-y)}`` must be close to 1, uniformly, with the error
vanishing as ``R`` grows. The discrepancy ``D(k, R)`` is the largest observed
``|e^{ik(x-y)} - 1|`` over a sample of matching pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, WindowError
from .pointset import DecoratedPointSet, matching_pairs

DEFAULT_RADII = (2, 4, 8, 16, 32)
DEFAULT_TOL = 1e-3
DECAY_SLOPE = 0.5       # tail slope of log D against log R counted as decay
REJECT_FLOOR = 0.5      # discrepancy floor counted as bounded away from zero


class Discrepancy(NamedTuple):
    value: float
    n_pairs: int

    @property
    def empty(self) -> bool:
        return self.n_pairs == 0


@dataclass
class EigenvalueReport:
    k: float
    radii: list[float]
    discrepancies: list[float]
    verdict: str
    n_pairs: list[int] = field(default_factory=list)
    tail_slope: float = np.nan

    @property
    def floor(self) -> float:
        tail = self.discrepancies[len(self.discrepancies) // 2:]
        return float(min(tail))

    def to_dict(self) -> dict:
        return {"k": self.k, "radii": list(self.radii),
                "discrepancies": list(self.discrepancies), "verdict": self.verdict}


def phase_defect(k: float, separations: np.ndarray) -> np.ndarray:
    """``|e^{ik s} - 1|``, computed as ``2|sin(ks/2)|`` (exactly even in k)."""
    return 2.0 * np.abs(np.sin(0.5 * k * np.asarray(separations, dtype=float)))


def discrepancy_from_pairs(k: float, pairs: np.ndarray) -> Discrepancy:
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(pairs) == 0:
        return Discrepancy(0.0, 0)
    return Discrepancy(float(phase_defect(k, pairs[:, 1] - pairs[:, 0]).max()), len(pairs))


def eigenvalue_discrepancy(ps: DecoratedPointSet, k: float, R: float,
                           max_pairs: int = 256, seed: int = 0) -> Discrepancy:
    return discrepancy_from_pairs(k, matching_pairs(ps, R, max_pairs, seed))


def _check_radius(ps: DecoratedPointSet, R: float) -> None:
    lo, hi = ps.window
    if hi - lo < 8 * R:
        raise WindowError(f"window of length {hi - lo} too small for radius {R}")


def classify_discrepancies(radii: Sequence[float], values: Sequence[float],
                           tol: float = DEFAULT_TOL) -> tuple[str, float]:
    """Verdict from a discrepancy profile; returns ``(verdict, tail_slope)``."""
    D = np.asarray(values, dtype=float)
    R = np.asarray(radii, dtype=float)
    if D[-1] <= tol:
        return "topological", -np.inf
    tail = slice(max(0, len(D) - 3), len(D))
    Dt, Rt = D[tail], R[tail]
    slope = np.nan
    if np.all(Dt > 0):
        slope = float(np.polyfit(np.log(Rt), np.log(Dt), 1)[0])
    if slope <= -DECAY_SLOPE and D[-1] < 0.5 * D.max() and D[-1] <= Dt.min():
        return "topological", slope
    floor = D[len(D) // 2:].min()
    if floor >= REJECT_FLOOR and not (slope <= -DECAY_SLOPE / 2):
        return "rejected", slope
    return "undecided", slope


def eigenvalue_verdict(ps: DecoratedPointSet, k: float,
                       R_schedule: Sequence[float] = DEFAULT_RADII,
                       tol: float = DEFAULT_TOL, max_pairs: int = 256,
                       seed: int = 0) -> EigenvalueReport:
    """Classify ``k`` as ``topological``, ``rejected`` or ``undecided``.

    ``topological``: the discrepancy at the largest radius is below ``tol``, or the
    discrepancies decay over the tail of the schedule (log-log slope at most -1/2,
    last value the smallest and under half of the maximum). ``rejected``: the
    discrepancies stay at or above 0.5 over the second half of the schedule
    without decaying.
    """
    return eigenvalue_scan(ps, [k], R_schedule, tol, max_pairs, seed)[0]


def eigenvalue_scan(ps: DecoratedPointSet, k_list: Sequence[float],
                    R_schedule: Sequence[float] = DEFAULT_RADII,
                    tol: float = DEFAULT_TOL, max_pairs: int = 256,
                    seed: int = 0) -> list[EigenvalueReport]:
    """Like :func:`eigenvalue_verdict` for several wave numbers, sharing the pair samples."""
    radii = [float(r) for r in R_schedule]
    if len(radii) < 3:
        raise ConfigurationError("radius schedule needs at least 3 entries")
    if np.any(np.diff(radii) <= 0):
        raise ConfigurationError("radius schedule must be increasing")
    _check_radius(ps, radii[-1])
    samples = [matching_pairs(ps, R, max_pairs, seed) for R in radii]
    reports = []
    for k in k_list:
        ds = [discrepancy_from_pairs(k, pairs) for pairs in samples]
        values = [d.value for d in ds]
        counts = [d.n_pairs for d in ds]
        verdict, slope = classify_discrepancies(radii, values, tol)
        if counts[-1] == 0:
            verdict = "undecided"
        reports.append(EigenvalueReport(float(k), radii, values, verdict, counts, slope))
    return reports


def group_closure_check(ps: DecoratedPointSet, k1: float, k2: float, R: float,
                        tol: float = DEFAULT_TOL, max_pairs: int = 256,
                        seed: int = 0) -> bool:
    """Whether ``k1 + k2`` passes at ``(R, 2 tol)`` given that ``k1`` and ``k2`` pass
    at ``(R, tol)`` on the same pair sample. Returns False if either summand fails."""
    pairs = matching_pairs(ps, R, max_pairs, seed)
    d1 = discrepancy_from_pairs(k1, pairs).value
    d2 = discrepancy_from_pairs(k2, pairs).value
    if d1 > tol or d2 > tol:
        return False
    return discrepancy_from_pairs(k1 + k2, pairs).value <= 2 * tol
