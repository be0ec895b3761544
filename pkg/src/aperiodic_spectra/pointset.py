"""Decorated point sets on the line.

A point set is a sorted array of positions with one decoration (an index into an
alphabet) per point. Sets built from words place point ``i`` at the cumulative
length of the tiles to its left, shifted so that a chosen letter sits at 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, WindowError
from .substitution import Substitution, iterate, two_sided_word

DEFAULT_QUANTUM = 1e-9

# primes below 2**31 keep every modular product inside int64
_P1, _B1 = 2147483629, 1000003
_P2, _B2 = 2147483587, 916139


@dataclass(frozen=True)
class DecoratedPointSet:
    positions: np.ndarray
    symbols: np.ndarray
    alphabet: tuple[str, ...]
    window: tuple[float, float]
    quantum: float = DEFAULT_QUANTUM

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        sym = np.asarray(self.symbols, dtype=np.int64)
        if pos.ndim != 1 or pos.shape != sym.shape:
            raise ConfigurationError("positions and symbols must be 1-d arrays of equal length")
        if len(pos) and np.any(np.diff(pos) <= 0):
            raise ConfigurationError("positions must be strictly increasing")
        if len(sym) and (sym.min() < 0 or sym.max() >= len(self.alphabet)):
            raise ConfigurationError("decoration outside the declared alphabet")
        lo, hi = self.window
        if len(pos) and (pos[0] < lo or pos[-1] > hi):
            raise ConfigurationError("window does not contain all points")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "symbols", sym)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "window", (float(lo), float(hi)))

    def __len__(self):
        return len(self.positions)

    @classmethod
    def from_points(cls, positions, symbols, alphabet, window=None, quantum=DEFAULT_QUANTUM):
        positions = np.asarray(positions, dtype=float)
        if window is None:
            window = (positions[0], positions[-1])
        return cls(positions, symbols, alphabet, window, quantum)

    @property
    def min_separation(self) -> float:
        return float(np.diff(self.positions).min()) if len(self) > 1 else np.inf

    def shifted(self, t: float) -> "DecoratedPointSet":
        lo, hi = self.window
        return DecoratedPointSet(self.positions + t, self.symbols, self.alphabet,
                                 (lo + t, hi + t), self.quantum)

    def grid_positions(self) -> np.ndarray:
        """Integer coordinates used for exact comparisons."""
        pos = self.positions
        if np.all(pos == np.round(pos)):
            return pos.astype(np.int64)
        return np.round(pos / self.quantum).astype(np.int64)

    def grid_unit(self) -> float:
        return 1.0 if np.all(self.positions == np.round(self.positions)) else self.quantum

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["position", "symbol"])
        for x, s in zip(self.positions, self.symbols):
            writer.writerow([f"{x:.12g}", self.alphabet[s]])


class Patch(NamedTuple):
    center: float
    radius: float
    offsets: np.ndarray
    symbols: np.ndarray

    def content(self, alphabet=None) -> list[tuple[float, object]]:
        syms = self.symbols if alphabet is None else [alphabet[s] for s in self.symbols]
        return list(zip(self.offsets.tolist(), list(syms)))


class DensityEstimate(NamedTuple):
    value: float
    halfwidths: np.ndarray
    values: np.ndarray

    @property
    def deviation(self) -> float:
        """Relative change between the two largest windows."""
        if len(self.values) < 2:
            return np.nan
        return abs(self.values[-1] - self.values[-2]) / abs(self.values[-1])


def from_word(word: Sequence[int], lengths, origin_index: int = 0,
              alphabet: Sequence[str] | None = None,
              quantum: float = DEFAULT_QUANTUM) -> DecoratedPointSet:
    """Place a word on the line; ``lengths`` is indexed by letter (array or mapping)."""
    word = np.asarray(word, dtype=np.int64)
    if len(word) == 0:
        raise ConfigurationError("empty word")
    if not 0 <= origin_index < len(word):
        raise ConfigurationError(f"origin index {origin_index} outside word of length {len(word)}")
    if alphabet is None:
        alphabet = tuple(str(i) for i in range(int(word.max()) + 1))
    if isinstance(lengths, Mapping):
        lengths = [lengths[a] for a in alphabet]
    lengths = np.asarray(lengths, dtype=float)
    if np.any(lengths <= 0):
        raise ConfigurationError("tile lengths must be positive")
    tiles = lengths[word]
    starts = np.concatenate([[0.0], np.cumsum(tiles[:-1])])
    positions = starts - starts[origin_index]
    window = (positions[0], positions[-1] + tiles[-1])
    return DecoratedPointSet(positions, word, tuple(alphabet), window, quantum)


def from_substitution(sub: Substitution, n: int, centered: bool = True) -> DecoratedPointSet:
    """Point set of the order-``n`` iterate.

    Mirror-completed substitutions give the two-sided word with site 0 at the
    origin; otherwise the one-sided iterate is placed with its middle letter at 0
    (``centered``) or its first letter at 0.
    """
    lengths = sub.lengths_array()
    if sub.mirror_completion:
        w = two_sided_word(sub, n)
        return from_word(w.letters, lengths, w.origin, sub.alphabet)
    word = iterate(sub, n)
    return from_word(word, lengths, len(word) // 2 if centered else 0, sub.alphabet)


def _check_inside(ps: DecoratedPointSet, lo: float, hi: float) -> None:
    wlo, whi = ps.window
    eps = 1e-12 * max(1.0, abs(wlo), abs(whi))
    # the window is half-open: a point sitting at its upper end is not populated
    if lo < wlo - eps or hi >= whi - eps:
        raise WindowError(f"[{lo}, {hi}] is not inside the populated window [{wlo}, {whi})")


def patch_at(ps: DecoratedPointSet, x: float, R: float) -> Patch:
    _check_inside(ps, x - R, x + R)
    slack = ps.quantum / 2
    lo = np.searchsorted(ps.positions, x - R - slack, side="left")
    hi = np.searchsorted(ps.positions, x + R + slack, side="right")
    return Patch(x, R, ps.positions[lo:hi] - x, ps.symbols[lo:hi])


def patches_equal(p: Patch, q: Patch, quantum: float = DEFAULT_QUANTUM) -> bool:
    if len(p.offsets) != len(q.offsets) or p.radius != q.radius:
        return False
    return bool(np.array_equal(p.symbols, q.symbols)
                and np.all(np.abs(p.offsets - q.offsets) <= quantum))


def density(ps: DecoratedPointSet, levels: int = 5) -> DensityEstimate:
    """Points per unit length on nested half-open windows ``[c - L, c + L)`` centered
    at the middle of the populated window."""
    lo, hi = ps.window
    if not hi > lo:
        raise ConfigurationError("window has zero length")
    center = 0.5 * (lo + hi)
    L = 0.5 * (hi - lo)
    halfwidths = L / 2.0 ** np.arange(levels - 1, -1, -1)
    left = np.searchsorted(ps.positions, center - halfwidths, side="left")
    right = np.searchsorted(ps.positions, center + halfwidths, side="left")
    values = (right - left) / (2 * halfwidths)
    return DensityEstimate(float(values[-1]), halfwidths, values)


def weights(ps: DecoratedPointSet, letter_map: Mapping[str, complex]) -> np.ndarray:
    """Per-point weights from a symbol -> weight map, aligned with ``ps.positions``."""
    missing = [a for a in set(ps.alphabet[s] for s in np.unique(ps.symbols)) if a not in letter_map]
    if missing:
        raise ConfigurationError(f"no weight given for symbols {sorted(missing)}")
    table = np.array([complex(letter_map.get(a, 0.0)) for a in ps.alphabet])
    w = table[ps.symbols]
    return w.real.copy() if np.all(w.imag == 0) else w


# -- patch hashing ------------------------------------------------------------

def _powers(base: int, mod: int, n: int) -> np.ndarray:
    out = np.ones(max(n, 1), dtype=np.int64)
    filled, step = 1, base % mod
    while filled < n:
        take = min(filled, n - filled)
        out[filled:filled + take] = out[:take] * step % mod
        filled += take
        step = step * step % mod
    return out


def _substring_hashes(tokens: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                      base: int, mod: int) -> np.ndarray:
    """Hash of tokens[lo:hi] for each pair, position independent."""
    n = len(tokens)
    inv = pow(base, mod - 2, mod)
    inv_pows = _powers(inv, mod, n)
    pows = _powers(base, mod, n)
    terms = (tokens % mod) * inv_pows % mod
    prefix = np.concatenate([[0], np.cumsum(terms) % mod])
    diff = (prefix[hi] - prefix[lo]) % mod
    return diff * pows[lo] % mod


def patch_keys(ps: DecoratedPointSet, R: float, eligible: np.ndarray | None = None):
    """Hash keys identifying the R-patch class of each point (rows of an int64 array)."""
    q = ps.grid_positions()
    rq = int(np.floor(R / ps.grid_unit() + 1e-9))
    lo = np.searchsorted(q, q - rq, side="left")
    hi = np.searchsorted(q, q + rq, side="right")
    idx = np.arange(len(q))
    if eligible is not None:
        lo, hi, idx = lo[eligible], hi[eligible], idx[eligible]
    sym_tok = ps.symbols + 1
    gaps = np.concatenate([np.diff(q), [0]])
    gap_tok = gaps * 1000003 + 7
    keys = np.stack([
        _substring_hashes(sym_tok, lo, hi, _B1, _P1),
        _substring_hashes(sym_tok, lo, hi, _B2, _P2),
        _substring_hashes(gap_tok, lo, hi - 1, _B1, _P1),
        _substring_hashes(gap_tok, lo, hi - 1, _B2, _P2),
        idx - lo,
        hi - lo,
    ], axis=1)
    return keys, idx


def _eligible(ps: DecoratedPointSet, R: float) -> np.ndarray:
    lo, hi = ps.window
    return (ps.positions - R >= lo) & (ps.positions + R < hi)


def _van_der_corput(i: int) -> float:
    x, denom = 0.0, 1.0
    while i:
        denom *= 2.0
        x += (i & 1) / denom
        i >>= 1
    return x


def matching_pairs(ps: DecoratedPointSet, R: float, max_pairs: int = 256,
                   seed: int = 0) -> np.ndarray:
    """Pairs ``(x, y)``, ``x < y``, of points carrying translation-identical R-patches.

    Separations are drawn log-uniformly between the smallest and largest available
    separation. The draw is a deterministic stream, so the sample for a given
    ``max_pairs`` is a prefix of the sample for any larger value. Every returned
    pair is re-checked by extracting both patches.
    """
    mask = _eligible(ps, R)
    if mask.sum() < 2:
        return np.empty((0, 2))
    keys, idx = patch_keys(ps, R, mask)
    _, group = np.unique(keys, axis=0, return_inverse=True)
    group = group.ravel()
    counts = np.bincount(group)
    keep = counts[group] >= 2
    if not keep.any():
        return np.empty((0, 2))
    members, group = idx[keep], group[keep]
    order = np.lexsort((ps.positions[members], group))
    members, group = members[order], group[order]
    # position along a single sorted axis: groups laid out far apart
    x = ps.positions[members]
    span = ps.window[1] - ps.window[0]
    offset = group * (2.0 * span + 1.0)
    axis = offset + x
    group_end = np.searchsorted(group, group, side="right")

    smin = max(float(np.diff(np.unique(x)).min()) if len(np.unique(x)) > 1 else 1.0,
               ps.quantum)
    smax = span
    rng = np.random.default_rng(seed)
    pairs, seen = [], set()
    attempts = 0
    max_attempts = 20 * max_pairs + 100
    while len(pairs) < max_pairs and attempts < max_attempts:
        u = _van_der_corput(attempts + 1)
        attempts += 1
        target = smin * (smax / smin) ** u
        i = int(rng.integers(len(members)))
        j = int(np.searchsorted(axis, axis[i] + target - 1e-9 * target, side="left"))
        if j >= group_end[i]:
            # wrap to the largest available separation within the group
            j = group_end[i] - 1
        if j <= i:
            continue
        a, b = int(members[i]), int(members[j])
        if (a, b) in seen:
            continue
        seen.add((a, b))
        xa, xb = ps.positions[a], ps.positions[b]
        if not patches_equal(patch_at(ps, xa, R), patch_at(ps, xb, R), ps.quantum):
            continue
        pairs.append((xa, xb))
    return np.array(pairs, dtype=float).reshape(-1, 2)


def distinct_patch_count(ps: DecoratedPointSet, R: float) -> int:
    """Number of R-patch classes centered at points (FLC diagnostic)."""
    mask = _eligible(ps, R)
    if not mask.any():
        return 0
    keys, _ = patch_keys(ps, R, mask)
    return len(np.unique(keys, axis=0))
