"""Built-in case studies: Thue-Morse, Fibonacci, period-doubling and periodic words."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .gaplabel import RealModule, dyadic_module, golden_module
from .pointset import DecoratedPointSet, from_substitution, from_word
from .spectra.tightbinding import TightBindingModel
from .substitution import Substitution

TM_BAR = "1̄"      # "1" with a combining macron


@dataclass(frozen=True)
class Preset:
    """A word source plus the default parameters used by the command line."""

    name: str
    substitution: Substitution | None = None
    period_word: tuple[str, ...] | None = None
    potential: Mapping[str, float] = field(default_factory=dict)
    weights: Mapping[str, complex] = field(default_factory=dict)
    gap_module: RealModule | None = None        # where gap labels are expected to lie
    eigen_module: RealModule | None = None      # topological eigenvalues divided by 2 pi
    orders: tuple[int, ...] = ()
    window: int = 2 ** 16
    min_width: float = 1e-3
    label_tol: float = 1e-4
    point_order: int = 16
    radii: tuple[float, ...] = (2, 4, 8, 16, 32)

    def model(self, coupling: float = 1.0) -> TightBindingModel:
        return TightBindingModel(self.potential, coupling, self.substitution, self.period_word)

    def point_set(self, order: int | None = None) -> DecoratedPointSet:
        n = self.point_order if order is None else order
        if self.substitution is not None:
            return from_substitution(self.substitution, n)
        # periodic word: 2^n sites centered on 0
        p = len(self.period_word)
        alphabet = tuple(sorted(set(self.period_word)))
        idx = np.array([alphabet.index(a) for a in self.period_word])
        N = max(2 ** n, 2 * p)
        word = idx[np.arange(-(N // 2), N - N // 2) % p]
        return from_word(word, np.ones(len(alphabet)), N // 2, alphabet)


def thue_morse() -> Preset:
    sub = Substitution(("1", TM_BAR), {"1": ("1", TM_BAR), TM_BAR: (TM_BAR, "1")},
                       seed="1", mirror_completion=True)
    return Preset("thue-morse", sub, None, {"1": 1.0, TM_BAR: -1.0}, {"1": 1.0, TM_BAR: -1.0},
                  dyadic_module(3), dyadic_module(1), tuple(range(6, 11)), 2 ** 16, 1e-3, 1e-4,
                  16, (2, 4, 8, 16, 32))


def fibonacci() -> Preset:
    sub = Substitution(("a", "b"), {"a": ("a", "b"), "b": ("a",)}, seed="a")
    return Preset("fibonacci", sub, None, {"a": 1.0, "b": -1.0}, {"a": 1.0, "b": -1.0},
                  golden_module(), golden_module(), tuple(range(10, 16)), 2 ** 23, 5e-3, 1e-6,
                  25, (64, 128, 256, 512, 1024))


def period_doubling() -> Preset:
    sub = Substitution(("a", "b"), {"a": ("a", "b"), "b": ("a", "a")}, seed="a")
    return Preset("period-doubling", sub, None, {"a": 1.0, "b": -1.0}, {"a": 0.0, "b": 1.0},
                  dyadic_module(3), dyadic_module(1), tuple(range(6, 11)), 2 ** 16, 1e-3, 1e-4,
                  16, (2, 4, 8, 16, 32))


def periodic(p: int) -> Preset:
    """Period-``p`` cosine potential ``V(n) = cos(2 pi n / p)`` on the integers."""
    if p < 1:
        raise ConfigurationError(f"period must be positive, got {p}")
    word = tuple(str(i) for i in range(p))
    potential = {str(i): math.cos(2 * math.pi * i / p) for i in range(p)}
    module = RealModule(((1 / p, f"1/{p}" if p > 1 else "1"),))
    weights = {str(i): 1.0 for i in range(p)}
    return Preset(f"periodic:{p}", None, word, potential, weights, module, module, (0, 1, 2),
                  2 ** 12, 1e-3, 1e-3, 12, (2, 4, 8))


def get_preset(name: str) -> Preset:
    if name == "thue-morse":
        return thue_morse()
    if name == "fibonacci":
        return fibonacci()
    if name == "period-doubling":
        return period_doubling()
    if name.startswith("periodic:"):
        try:
            p = int(name.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad period in preset {name!r}") from None
        return periodic(p)
    raise ConfigurationError(
        f"unknown preset {name!r}; choose thue-morse, fibonacci, period-doubling or periodic:p")
