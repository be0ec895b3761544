"""Discrete Schrödinger operators on substitution words.

Convention: ``(H psi)_n = psi_{n+1} + psi_{n-1} - 2 psi_n + lambda V(n) psi_n``, so
the diagonal is ``d_n = -2 + lambda V(n)``, the off-diagonals are 1 and the free
spectrum is ``[-4, 0]``. The transfer matrix of site ``n`` is
``[[E - d_n, -1], [1, 0]]``.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .. import _kernels
from ..errors import ConfigurationError
from ..substitution import Substitution, iterate

_WORD_CACHE: OrderedDict = OrderedDict()
_WORD_CACHE_SIZE = 16


def _cached_iterate(sub: Substitution, n: int) -> np.ndarray:
    key = (json.dumps(sub.to_dict(), sort_keys=True), n)
    word = _WORD_CACHE.get(key)
    if word is None:
        word = iterate(sub, n)
        _WORD_CACHE[key] = word
        while len(_WORD_CACHE) > _WORD_CACHE_SIZE:
            _WORD_CACHE.popitem(last=False)
    else:
        _WORD_CACHE.move_to_end(key)
    return word


@dataclass(frozen=True)
class TightBindingModel:
    """A potential ``symbol -> V`` on either a substitution word or a periodic word.

    With a substitution, site ``n`` carries letter ``n`` of the fixed-point word: the
    two-sided mirror-completed word when ``substitution.mirror_completion`` is set
    (sites of either sign), otherwise the one-sided word (sites ``n >= 0``). An
    explicit ``word`` is repeated periodically.
    """

    potential_map: Mapping[str, float]
    coupling: float = 1.0
    substitution: Substitution | None = None
    word: tuple[str, ...] | None = None

    def __post_init__(self):
        if (self.substitution is None) == (self.word is None):
            raise ConfigurationError("give exactly one of substitution or word")
        if self.word is not None:
            if len(self.word) == 0:
                raise ConfigurationError("explicit word is empty")
            object.__setattr__(self, "word", tuple(self.word))
        pm = {str(a): float(v) for a, v in self.potential_map.items()}
        missing = [a for a in self.alphabet if a not in pm]
        if missing:
            raise ConfigurationError(f"potential_map has no value for {missing}")
        if not all(math.isfinite(v) for v in pm.values()) or not math.isfinite(self.coupling):
            raise ConfigurationError("potential values and coupling must be finite")
        object.__setattr__(self, "potential_map", pm)
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def alphabet(self) -> tuple[str, ...]:
        if self.substitution is not None:
            return self.substitution.alphabet
        return tuple(sorted(set(self.word)))

    @property
    def two_sided(self) -> bool:
        return self.substitution is None or self.substitution.mirror_completion

    def with_coupling(self, coupling: float) -> "TightBindingModel":
        return TightBindingModel(self.potential_map, coupling, self.substitution, self.word)

    def letter_potential(self) -> np.ndarray:
        return np.array([self.potential_map[a] for a in self.alphabet])

    def letters(self, start: int, stop: int) -> np.ndarray:
        """Letter indices of sites ``start .. stop-1``."""
        if stop < start:
            raise ConfigurationError(f"empty site range [{start}, {stop})")
        if self.word is not None:
            idx = {a: i for i, a in enumerate(self.alphabet)}
            period = np.array([idx[a] for a in self.word], dtype=np.int64)
            return period[np.arange(start, stop) % len(period)]
        if start < 0 and not self.two_sided:
            raise ConfigurationError("one-sided word has no sites below 0")
        reach = max(stop, -start, 1)
        n = 0
        while len(_cached_iterate(self.substitution, n)) < reach:
            n += 1
        right = _cached_iterate(self.substitution, n)
        sites = np.arange(start, stop)
        # mirror completion: site -m carries the letter of site m - 1
        return right[np.where(sites >= 0, sites, -sites - 1)].astype(np.int64)

    def window_letters(self, N: int) -> np.ndarray:
        """``N`` consecutive sites, centered on 0 for two-sided words, else from 0."""
        if N < 1:
            raise ConfigurationError(f"window size must be positive, got {N}")
        start = -(N // 2) if self.two_sided else 0
        return self.letters(start, start + N)

    def approximant_letters(self, order: int) -> np.ndarray:
        """One period of the approximant: the order-``n`` iterate, or the explicit word."""
        if self.word is not None:
            return self.letters(0, len(self.word))
        return _cached_iterate(self.substitution, order).astype(np.int64)

    def diagonal(self, letters: np.ndarray) -> np.ndarray:
        return -2.0 + self.coupling * self.letter_potential()[letters]


def sturm_count_diag(diag: np.ndarray, E) -> np.ndarray | int:
    """Eigenvalues below ``E`` of the Jacobi matrix with diagonal ``diag`` and unit
    off-diagonals. Vectorized over ``E``."""
    energies = np.atleast_1d(np.asarray(E, dtype=float))
    counts = _kernels.sturm_counts(np.ascontiguousarray(diag, dtype=float), energies)
    return int(counts[0]) if np.ndim(E) == 0 else counts


def sturm_count(model: TightBindingModel, N: int, E):
    """Dirichlet eigenvalues below ``E`` of ``H`` restricted to the size-``N`` window."""
    return sturm_count_diag(model.diagonal(model.window_letters(N)), E)


def ids(model: TightBindingModel, E, N: int = 2 ** 16):
    """Finite-window integrated density of states ``sturm_count / N``."""
    c = sturm_count(model, N, E)
    return c / N


@dataclass(frozen=True)
class TransferMatrix:
    """Product of transfer matrices, kept as ``descaled * exp(log_scale)``.

    ``log_det`` tracks ``log|det|`` of the full product separately; it comes from
    the diagonal of a running QR factorization and so stays accurate when the
    entries grow exponentially.
    """

    descaled: np.ndarray
    log_scale: float
    log_det: float = 0.0
    det_sign: float = 1.0

    def matrix(self) -> np.ndarray:
        return self.descaled * math.exp(self.log_scale)

    def det(self) -> float:
        return self.det_sign * math.exp(self.log_det)

    def trace(self) -> float:
        return float(np.trace(self.descaled)) * math.exp(self.log_scale)

    def log_norm(self) -> float:
        return self.log_scale + math.log(np.linalg.norm(self.descaled, 2))


def transfer_product_diag(diag: np.ndarray, E: float) -> TransferMatrix:
    """``T_{last} ... T_{first}`` for the given diagonal entries."""
    q, A, B, s1, s2, off = _kernels.transfer_qr(np.ascontiguousarray(E - np.asarray(diag, dtype=float)))
    R = np.array([[s1, off], [0.0, s2 * math.exp(B - A)]])
    return TransferMatrix(q @ R, A, A + B, float(np.sign(np.linalg.det(q))) * s1 * s2)


def transfer_product(model: TightBindingModel, E: float, start: int, stop: int) -> TransferMatrix:
    """Ordered product over sites ``start .. stop-1`` (later sites to the left)."""
    return transfer_product_diag(model.diagonal(model.letters(start, stop)), E)


class LyapunovEstimate(NamedTuple):
    value: float
    raw: float


def lyapunov_estimate(model: TightBindingModel, E: float, L: int = 10 ** 5,
                      start: int = 0) -> LyapunovEstimate:
    if L < 1000:
        raise ConfigurationError(f"Lyapunov length must be at least 1000, got {L}")
    raw = transfer_product(model, E, start, start + L).log_norm() / L
    return LyapunovEstimate(max(raw, 0.0), raw)


def lyapunov_exponent(model: TightBindingModel, E: float, L: int = 10 ** 5,
                      start: int = 0) -> float:
    """``(1/L) log ||T_L ... T_1||``, clipped at 0 (see :func:`lyapunov_estimate`)."""
    return lyapunov_estimate(model, E, L, start).value
