"""One-dimensional continuum Schrödinger operators ``-psi'' + V psi`` with
``V(x) = sum_j lambda_j cos(k_j x + phi_j)``.

The integrated density of states is read off the Prüfer phase: with
``theta' = cos^2 theta + (E - V) sin^2 theta`` the phase advances by ``pi`` per
node of the solution, so ``theta(L) / (pi L)`` converges to the IDS at ``E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import _kernels
from ..errors import ConfigurationError, RefinementError

MAX_PHASE_STEP = 0.1      # largest admissible phase increment per integration step


@dataclass(frozen=True)
class ContinuumModel:
    amplitudes: tuple[float, ...]
    wavenumbers: tuple[float, ...]
    phases: tuple[float, ...] = ()
    step: float | None = None

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        ks = tuple(float(k) for k in self.wavenumbers)
        phases = tuple(float(p) for p in self.phases) or (0.0,) * len(amps)
        if not (len(amps) == len(ks) == len(phases)):
            raise ConfigurationError("amplitudes, wavenumbers and phases must have equal length")
        if not all(math.isfinite(v) for v in amps + ks + phases):
            raise ConfigurationError("potential terms must be finite")
        if self.step is not None and not self.step > 0:
            raise ConfigurationError(f"integration step must be positive, got {self.step}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "wavenumbers", ks)
        object.__setattr__(self, "phases", phases)

    def potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.zeros_like(x)
        for a, k, p in zip(self.amplitudes, self.wavenumbers, self.phases):
            v = v + a * np.cos(k * x + p)
        return v

    def phase_rate_bound(self, E: float) -> float:
        """Upper bound of ``|theta'|`` at energy ``E``."""
        return max(1.0, abs(E) + sum(abs(a) for a in self.amplitudes))

    def _arrays(self):
        return (np.array(self.amplitudes, dtype=float), np.array(self.wavenumbers, dtype=float),
                np.array(self.phases, dtype=float))


def _step_for(cm: ContinuumModel, energies: np.ndarray) -> float:
    bound = max(cm.phase_rate_bound(float(E)) for E in energies)
    if cm.step is None:
        return 0.9 * MAX_PHASE_STEP / bound
    if cm.step * bound >= MAX_PHASE_STEP:
        raise RefinementError(
            f"step {cm.step} allows phase increments up to {cm.step * bound:.3g} rad; "
            f"need < {MAX_PHASE_STEP}", (0.0, cm.step))
    return cm.step


def prufer_rotation_number(cm: ContinuumModel, E, L: float = 1e4):
    """``theta(L) / (pi L)``, the finite-length IDS at ``E`` (scalar or array)."""
    if not L > 0:
        raise ConfigurationError(f"integration length must be positive, got {L}")
    energies = np.atleast_1d(np.asarray(E, dtype=float))
    h = _step_for(cm, energies)
    theta = _kernels.prufer_phase(*cm._arrays(), energies, float(L), h)
    out = theta / (math.pi * L)
    return float(out[0]) if np.ndim(E) == 0 else out


def monodromy_discriminant(cm: ContinuumModel, period: float, energies,
                           steps_per_period: int = 400) -> np.ndarray:
    """``|tr M(E)| - 2`` for the monodromy over one period of a periodic potential."""
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    tr = _kernels.monodromy_traces(*cm._arrays(), E, float(period), int(steps_per_period))
    return np.abs(tr) - 2.0


def periodic_gaps(cm: ContinuumModel, period: float, e_min: float, e_max: float,
                  n_grid: int = 2000, steps_per_period: int = 400,
                  tol: float = 1e-10) -> list[tuple[float, float]]:
    """Spectral gaps of a periodic potential inside ``[e_min, e_max]``, located by sign
    changes of the monodromy discriminant and refined by bisection.

    The region below the spectrum is not a gap and is never reported.
    """
    for k in cm.wavenumbers:
        ratio = k * period / (2 * math.pi)
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigurationError(f"wave number {k} is not periodic with period {period}")
    E = np.linspace(e_min, e_max, n_grid)
    f = monodromy_discriminant(cm, period, E, steps_per_period)
    inside = f <= 0
    if not inside.any():
        return []

    def edge(out_e: float, in_e: float) -> float:
        a, b = out_e, in_e
        while abs(a - b) > tol:
            m = 0.5 * (a + b)
            if monodromy_discriminant(cm, period, m, steps_per_period)[0] > 0:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    gaps = []
    first = int(np.argmax(inside))
    i = first
    while i < n_grid:
        if inside[i]:
            i += 1
            continue
        j = i
        while j < n_grid and not inside[j]:
            j += 1
        if j == n_grid:
            break                          # open-ended: cannot confirm the upper edge
        gaps.append((edge(E[i], E[i - 1]), edge(E[j - 1], E[j])))
        i = j
    return gaps


def first_gap(cm: ContinuumModel, n_grid: int = 2000) -> tuple[float, float]:
    """First gap of a single-cosine (Mathieu) potential ``lambda cos(k x + phi)``."""
    if len(cm.amplitudes) != 1 or cm.wavenumbers[0] == 0:
        raise ConfigurationError("first_gap needs a single cosine term with k != 0")
    k = abs(cm.wavenumbers[0])
    lam = abs(cm.amplitudes[0])
    top = (k / 2) ** 2 + 2 * lam + 0.5 * k * k
    gaps = periodic_gaps(cm, 2 * math.pi / k, -lam - 0.5, top, n_grid)
    if not gaps:
        raise RefinementError(f"no gap resolved in [{-lam - 0.5}, {top}]", (-lam - 0.5, top))
    return gaps[0]


def ids_plateaus(cm: ContinuumModel, energies: Sequence[float], L: float = 1e4,
                 min_points: int = 3) -> list[tuple[float, float, float]]:
    """Gaps of a (possibly quasi-periodic) potential as plateaus of the finite-length
    IDS on an energy grid: runs of at least ``min_points`` energies whose IDS values
    agree within ``2 / (pi L)``. Returns ``(e_low, e_high, label)`` per plateau."""
    E = np.asarray(energies, dtype=float)
    if len(E) < min_points or np.any(np.diff(E) <= 0):
        raise ConfigurationError("energy grid must be increasing with enough points")
    n = np.asarray(prufer_rotation_number(cm, E, L))
    eps = 2.0 / (math.pi * L)
    out = []
    i = 0
    while i < len(E):
        j = i
        while j + 1 < len(E) and abs(n[j + 1] - n[i]) < eps:
            j += 1
        if j - i + 1 >= min_points and 0 < n[i] and i > 0:
            out.append((float(E[i]), float(E[j]), float(np.median(n[i:j + 1]))))
        i = j + 1
    return out
