"""Bombieri-Taylor amplitudes, autocorrelation coefficients and Bragg-peak scans.

All windows are half-open intervals ``[c - L, c + L)`` (``c = 0`` unless a center
is given). Amplitudes are normalized per unit length, ``a = (1/2L) sum w(x) e^{-ikx}``,
so the intensity ``|a|**2`` of a lattice of unit spacing is 1 on the reciprocal
lattice.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, WindowError
from .pointset import DecoratedPointSet

BRAGG_THRESHOLD = 1e-6
STABILITY_TOL = 0.05
MIN_DECAY_SLOPE = 0.05
ZERO_INTENSITY = 1e-24  # below this (relative to mean |w|^2 squared) an intensity is an exact zero


@dataclass
class DiffractionSample:
    k: float
    window_sizes: np.ndarray
    amplitudes: np.ndarray

    @property
    def intensities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class AutocorrelationTable:
    displacements: np.ndarray
    coefficients: np.ndarray
    halfwidth: float
    center: float = 0.0

    def __getitem__(self, z: float) -> complex:
        i = np.searchsorted(self.displacements, z - 1e-9 * max(1.0, abs(z)))
        if i < len(self.displacements) and abs(self.displacements[i] - z) <= 1e-9 * max(1.0, abs(z)):
            return complex(self.coefficients[i])
        raise KeyError(z)

    def __contains__(self, z: float) -> bool:
        try:
            self[z]
        except KeyError:
            return False
        return True

    def wiener_average(self, k: float) -> complex:
        """Cesaro mean ``(1/2Z) sum_{|z|<=Z} gamma(z) e^{-ikz}`` over the stored range."""
        zmax = np.abs(self.displacements).max()
        if zmax == 0:
            raise ConfigurationError("autocorrelation table has no nonzero displacement")
        return complex(np.sum(self.coefficients * np.exp(-1j * k * self.displacements)) / (2 * zmax))


@dataclass
class PeakResult:
    k: float
    intensity: float
    verdict: str
    intensities: np.ndarray = field(repr=False)
    slope: float = np.nan

    def to_dict(self) -> dict:
        return {"k": self.k, "intensity": self.intensity, "verdict": self.verdict}


def _window_slice(ps: DecoratedPointSet, L: float, center: float) -> slice:
    lo, hi = center - L, center + L
    wlo, whi = ps.window
    eps = 1e-12 * max(1.0, abs(wlo), abs(whi))
    if lo < wlo - eps or hi > whi + eps:
        raise WindowError(f"window [{lo}, {hi}) exceeds populated region [{wlo}, {whi}]")
    i = np.searchsorted(ps.positions, lo, side="left")
    j = np.searchsorted(ps.positions, hi, side="left")
    return slice(i, j)


def bt_amplitude(ps: DecoratedPointSet, w: np.ndarray, k: float, L: float,
                 center: float = 0.0) -> complex:
    sl = _window_slice(ps, L, center)
    x = ps.positions[sl]
    return complex(np.sum(w[sl] * np.exp(-1j * k * x)) / (2 * L))


def amplitude_series(ps: DecoratedPointSet, w: np.ndarray, k: float,
                     halfwidths: Sequence[float], center: float = 0.0) -> np.ndarray:
    """Amplitudes on several windows sharing one center (one pass over the points)."""
    halfwidths = np.asarray(halfwidths, dtype=float)
    outer = _window_slice(ps, halfwidths.max(), center)
    x = ps.positions[outer]
    terms = w[outer] * np.exp(-1j * k * x)
    csum = np.concatenate([[0.0], np.cumsum(terms)])
    out = np.empty(len(halfwidths), dtype=complex)
    for n, L in enumerate(halfwidths):
        _window_slice(ps, L, center)
        i = np.searchsorted(x, center - L, side="left")
        j = np.searchsorted(x, center + L, side="left")
        out[n] = (csum[j] - csum[i]) / (2 * L)
    return out


def diffraction_sample(ps, w, k, window_schedule, center=0.0) -> DiffractionSample:
    Ls = np.asarray(window_schedule, dtype=float)
    return DiffractionSample(k, Ls, amplitude_series(ps, w, k, Ls, center))


def autocorrelation(ps: DecoratedPointSet, w: np.ndarray, L: float, z_max: float,
                    center: float = 0.0) -> AutocorrelationTable:
    """``gamma(z) = (1/2L) sum w(x+z) conj(w(x))`` over pairs inside the window.

    Only displacements realized by some pair appear in the table.
    """
    if not z_max < L:
        raise ConfigurationError(f"z_max={z_max} must be smaller than the window halfwidth L={L}")
    sl = _window_slice(ps, L, center)
    x = ps.positions[sl]
    wx = np.asarray(w[sl], dtype=complex)
    unit = ps.grid_unit()
    q = np.round(x / unit).astype(np.int64)
    keys = [np.zeros(1, dtype=np.int64)]
    vals = [np.array([np.sum(np.abs(wx) ** 2)], dtype=complex)]
    zq = int(np.floor(z_max / unit + 1e-9))
    for d in range(1, len(x)):
        dz = q[d:] - q[:-d]
        ok = dz <= zq
        if not ok.any():
            break
        c = wx[d:][ok] * np.conj(wx[:-d][ok])
        keys += [dz[ok], -dz[ok]]
        vals += [c, np.conj(c)]
    keys = np.concatenate(keys)
    vals = np.concatenate(vals)
    uniq, inv = np.unique(keys, return_inverse=True)
    coef = np.zeros(len(uniq), dtype=complex)
    np.add.at(coef, inv, vals)
    return AutocorrelationTable(uniq * unit, coef / (2 * L), L, center)


def _loglog_fit(window_lengths: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    lx, ly = np.log(window_lengths), np.log(values)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def decay_exponent(ps, w, k, window_schedule, center=0.0) -> float:
    """Least-squares slope of ln(intensity) against ln(window length)."""
    sample = diffraction_sample(ps, w, k, window_schedule, center)
    I = sample.intensities
    if np.any(I <= 0):
        return -np.inf
    return _loglog_fit(2 * sample.window_sizes, I)[0]


def classify(sample: DiffractionSample, theta: float = BRAGG_THRESHOLD,
             tol: float = STABILITY_TOL, scale: float = 1.0) -> PeakResult:
    """``scale`` is the squared mean of ``|w|^2``; it sets what counts as a zero intensity."""
    I = sample.intensities
    lengths = 2 * sample.window_sizes
    if I.min() >= theta and abs(I[-1] - I[-2]) / I[-1] < tol:
        return PeakResult(sample.k, float(I[-1]), "bragg", I, 0.0)
    positive = I > ZERO_INTENSITY * scale
    if positive.sum() < 3:
        verdict = "decaying" if I[-1] < theta else "undecided"
        return PeakResult(sample.k, 0.0 if verdict == "decaying" else float(I[-1]),
                          verdict, I, -np.inf)
    slope, rms = _loglog_fit(lengths[positive], I[positive])
    span = np.log(lengths[positive].max() / lengths[positive].min())
    if I[-1] < theta and not positive[-1]:
        return PeakResult(sample.k, 0.0, "decaying", I, slope)
    if slope < -MIN_DECAY_SLOPE and abs(slope) * span > 2 * rms and I[-1] < I[0]:
        return PeakResult(sample.k, 0.0, "decaying", I, slope)
    return PeakResult(sample.k, float(I[-1]), "undecided", I, slope)


def peak_scan(ps: DecoratedPointSet, w: np.ndarray, k_list: Iterable[float],
              window_schedule: Sequence[float], theta: float = BRAGG_THRESHOLD,
              tol: float = STABILITY_TOL, center: float = 0.0,
              threads: int | None = None) -> list[PeakResult]:
    """Classify each wave number as a Bragg peak, a decaying intensity or undecided.

    A peak is ``bragg`` when every intensity is at least ``theta`` and the last two
    differ by less than ``tol`` relatively; ``decaying`` when ln(intensity) falls
    linearly in ln(window length) (or vanishes identically).
    """
    Ls = np.asarray(window_schedule, dtype=float)
    if len(Ls) < 3:
        raise ConfigurationError("peak scan needs at least 3 windows")
    if np.any(np.diff(Ls) <= 0):
        raise ConfigurationError("window schedule must be strictly increasing")
    ks = [float(k) for k in k_list]
    scale = float(np.mean(np.abs(w) ** 2)) ** 2 or 1.0

    def one(k):
        return classify(diffraction_sample(ps, w, k, Ls, center), theta, tol, scale)

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, ks))
    return [one(k) for k in ks]


def write_samples_csv(fh, samples: Iterable[DiffractionSample]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["k", "window", "amplitude_re", "amplitude_im", "intensity"])
    for s in samples:
        for L, a in zip(s.window_sizes, s.amplitudes):
            writer.writerow([f"{s.k:.12g}", f"{2 * L:.12g}", f"{a.real:.12g}",
                             f"{a.imag:.12g}", f"{abs(a) ** 2:.12g}"])


def peaks_json(results: Iterable[PeakResult]) -> str:
    return json.dumps([r.to_dict() for r in results])
