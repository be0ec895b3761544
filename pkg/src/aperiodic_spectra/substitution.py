"""Symbolic substitutions: iterates, substitution matrices, Perron-Frobenius data
and patch frequencies.

Words are stored as integer arrays of indices into the alphabet; the
symbols themselves are opaque strings that only matter for input and output.

Matrix convention: ``M[a, b]`` counts the occurrences of letter ``a`` in the
image of letter ``b``, so letter-count vectors evolve as ``v -> M @ v``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, SubstitutionError, UnsupportedError

MAX_DENSE_ALPHABET = 8


@dataclass(frozen=True)
class Substitution:
    alphabet: tuple[str, ...]
    rules: Mapping[str, tuple[str, ...]]
    tile_lengths: Mapping[str, float] = field(default_factory=dict)
    seed: str | None = None
    mirror_completion: bool = False

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        if not alphabet:
            raise SubstitutionError("alphabet is empty")
        if len(set(alphabet)) != len(alphabet):
            raise SubstitutionError(f"duplicate symbols in alphabet {alphabet}")
        rules = {}
        for a in alphabet:
            if a not in self.rules:
                raise SubstitutionError(f"no rule for symbol {a!r}")
            image = tuple(self.rules[a])
            if not image:
                raise SubstitutionError(f"rule for {a!r} is empty")
            bad = [b for b in image if b not in alphabet]
            if bad:
                raise SubstitutionError(f"rule for {a!r} uses unknown symbols {bad}")
            rules[a] = image
        extra = set(self.rules) - set(alphabet)
        if extra:
            raise SubstitutionError(f"rules given for symbols outside the alphabet: {sorted(extra)}")
        lengths = {a: float(self.tile_lengths.get(a, 1.0)) for a in alphabet}
        for a, ell in lengths.items():
            if not ell > 0:
                raise SubstitutionError(f"tile length of {a!r} must be positive, got {ell}")
        seed = alphabet[0] if self.seed is None else self.seed
        if seed not in alphabet:
            raise SubstitutionError(f"seed {seed!r} is not in the alphabet")
        if self.mirror_completion and rules[seed][0] != seed:
            raise SubstitutionError(
                f"mirror completion needs rule({seed!r}) to start with {seed!r}"
            )
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "tile_lengths", lengths)
        object.__setattr__(self, "seed", seed)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise SubstitutionError(f"unknown symbol {symbol!r}") from None

    def lengths_array(self) -> np.ndarray:
        return np.array([self.tile_lengths[a] for a in self.alphabet], dtype=float)

    def rule_indices(self) -> list[np.ndarray]:
        return [np.array([self.index(b) for b in self.rules[a]], dtype=np.int64)
                for a in self.alphabet]

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "rules": {a: list(self.rules[a]) for a in self.alphabet},
            "lengths": dict(self.tile_lengths),
            "seed": self.seed,
            "mirror": self.mirror_completion,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Substitution":
        for key in ("alphabet", "rules"):
            if key not in data:
                raise SubstitutionError(f"substitution spec is missing field {key!r}")
        rules = data["rules"]
        if not isinstance(rules, Mapping):
            raise SubstitutionError("field 'rules' must be an object")
        for a, image in rules.items():
            if isinstance(image, str) or not isinstance(image, Sequence):
                raise SubstitutionError(f"rules.{a} must be a list of symbols")
        return cls(
            alphabet=tuple(data["alphabet"]),
            rules={a: tuple(v) for a, v in rules.items()},
            tile_lengths=dict(data.get("lengths", {})),
            seed=data.get("seed"),
            mirror_completion=bool(data.get("mirror", False)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Substitution":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SubstitutionError(
                    f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"
                ) from None
        return cls.from_dict(data)


class TwoSidedWord(NamedTuple):
    """A finite two-sided word; ``letters[origin]`` is the letter at site 0."""

    letters: np.ndarray
    origin: int

    def at(self, site: int) -> int:
        i = self.origin + site
        if not 0 <= i < len(self.letters):
            raise IndexError(f"site {site} outside the stored range")
        return int(self.letters[i])

    @property
    def first_site(self) -> int:
        return -self.origin

    @property
    def last_site(self) -> int:
        return len(self.letters) - 1 - self.origin


class FrequencyEstimate(NamedTuple):
    value: float
    achieved_tol: float
    order: int


def _expand(word: np.ndarray, table: np.ndarray, lens: np.ndarray) -> np.ndarray:
    rows = table[word]
    mask = np.arange(table.shape[1])[None, :] < lens[word][:, None]
    return rows[mask]


def _rule_table(sub: Substitution) -> tuple[np.ndarray, np.ndarray]:
    rules = sub.rule_indices()
    lens = np.array([len(r) for r in rules], dtype=np.int64)
    table = np.zeros((sub.size, lens.max()), dtype=np.int64)
    for a, r in enumerate(rules):
        table[a, : len(r)] = r
    return table, lens


def _word_dtype(sub: Substitution):
    return np.int8 if sub.size < 128 else np.int32


def iterate(sub: Substitution, n: int, seed: str | None = None) -> np.ndarray:
    """Return the ``n``-th image of ``seed`` (default: the substitution's seed)."""
    if n < 0:
        raise SubstitutionError(f"order must be nonnegative, got {n}")
    start = sub.seed if seed is None else seed
    word = np.array([sub.index(start)], dtype=np.int64)
    table, lens = _rule_table(sub)
    for _ in range(n):
        word = _expand(word, table, lens)
    return word.astype(_word_dtype(sub))


def two_sided_word(sub: Substitution, n: int) -> TwoSidedWord:
    """Mirror-completed two-sided word: site ``-m`` carries the letter of site ``m-1``."""
    if not sub.mirror_completion:
        raise UnsupportedError("two-sided completion requires mirror_completion=True")
    right = iterate(sub, n)
    return TwoSidedWord(np.concatenate([right[::-1], right]), len(right))


def word_symbols(sub: Substitution, word: Sequence[int]) -> list[str]:
    return [sub.alphabet[int(i)] for i in word]


def word_to_str(sub: Substitution, word: Sequence[int], sep: str = "") -> str:
    return sep.join(word_symbols(sub, word))


def parse_word(sub: Substitution, symbols: Sequence[str]) -> np.ndarray:
    return np.array([sub.index(s) for s in symbols], dtype=np.int64)


def substitution_matrix(sub: Substitution) -> np.ndarray:
    M = np.zeros((sub.size, sub.size), dtype=np.int64)
    for b, image in enumerate(sub.rule_indices()):
        np.add.at(M[:, b], image, 1)
    return M


def is_primitive(M: np.ndarray) -> bool:
    return _primitivity_power(M) is not None


def _primitivity_power(M: np.ndarray) -> int | None:
    """Smallest k <= n**2 with M**k > 0 entrywise, or None."""
    M = np.asarray(M)
    n = M.shape[0]
    pattern = (M > 0).astype(np.int64)
    power = pattern.copy()
    for k in range(1, n * n + 1):
        if power.all():
            return k
        power = ((power @ pattern) > 0).astype(np.int64)
    return None


def pf_data(M: np.ndarray) -> tuple[float, np.ndarray]:
    """Perron-Frobenius eigenvalue and normalized right eigenvector (letter frequencies)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if _primitivity_power(M) is None:
        raise SubstitutionError(
            f"matrix is not primitive: M**k has a zero entry for every k <= {n * n}"
        )
    if n > MAX_DENSE_ALPHABET:
        raise UnsupportedError(f"alphabet of size {n} exceeds the dense limit {MAX_DENSE_ALPHABET}")
    vals, vecs = np.linalg.eig(M)
    i = int(np.argmax(vals.real))
    lam = float(vals[i].real)
    v = np.abs(vecs[:, i].real)
    return lam, v / v.sum()


def is_pisot(M: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff every root of the characteristic polynomial besides the PF root lies
    strictly inside the unit circle."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n > MAX_DENSE_ALPHABET:
        raise UnsupportedError(f"alphabet of size {n} exceeds the dense limit {MAX_DENSE_ALPHABET}")
    if _primitivity_power(M) is None:
        raise SubstitutionError("Pisot test needs a primitive matrix")
    vals = np.linalg.eigvals(M)
    i = int(np.argmax(vals.real))
    others = np.delete(vals, i)
    return bool(np.all(np.abs(others) < 1.0 - tol))


def has_common_prefix(sub: Substitution) -> bool:
    """Raw diagnostic: all rule images start with the same letter."""
    return len({image[0] for image in sub.rules.values()}) == 1


# -- occurrence counting -----------------------------------------------------

_MATERIALIZE_LIMIT = 1 << 14


def _count_in(word: np.ndarray, pattern: np.ndarray) -> int:
    m = len(pattern)
    if len(word) < m:
        return 0
    windows = np.lib.stride_tricks.sliding_window_view(word, m)
    return int(np.count_nonzero((windows == pattern).all(axis=1)))


def count_occurrences(sub: Substitution, pattern: Sequence[int], n: int,
                      seed: str | None = None) -> tuple[int, int]:
    """Exact number of (overlapping) occurrences of ``pattern`` in ``iterate(n)``.

    Returns ``(count, length)``. Long iterates are never materialized: counts are
    propagated with boundary corrections computed from the (m-1)-letter prefixes
    and suffixes of the letter images.
    """
    pattern = np.asarray(pattern, dtype=np.int64)
    m = len(pattern)
    if m == 0:
        raise SubstitutionError("empty pattern")
    table, lens = _rule_table(sub)
    rules = sub.rule_indices()
    # materialize per-letter images while they are short
    images = [np.array([a]) for a in range(sub.size)]
    k = 0
    while k < n and max(len(w) for w in images) * int(lens.max()) <= _MATERIALIZE_LIMIT:
        images = [_expand(w, table, lens) for w in images]
        k += 1
    start = sub.index(sub.seed if seed is None else seed)
    if k == n:
        return _count_in(images[start], pattern), len(images[start])
    if min(len(w) for w in images) < m - 1:
        raise UnsupportedError("pattern longer than the materialized letter images")
    counts = [_count_in(w, pattern) for w in images]
    lengths = [len(w) for w in images]
    pre = [w[: m - 1] for w in images]
    suf = [w[len(w) - (m - 1):] if m > 1 else w[:0] for w in images]
    while k < n:
        new_counts, new_lengths, new_pre, new_suf = [], [], [], []
        for a in range(sub.size):
            r = rules[a]
            c = sum(counts[b] for b in r)
            if m > 1:
                for left, right in zip(r[:-1], r[1:]):
                    c += _count_in(np.concatenate([suf[left], pre[right]]), pattern)
            new_counts.append(c)
            new_lengths.append(sum(lengths[b] for b in r))
            new_pre.append(pre[r[0]])
            new_suf.append(suf[r[-1]])
        counts, lengths, pre, suf = new_counts, new_lengths, new_pre, new_suf
        k += 1
    return counts[start], lengths[start]


def _cycle_length(step: Mapping[int, int], start: int) -> int:
    seen, a, n = {}, start, 0
    while a not in seen:
        seen[a] = n
        a = step[a]
        n += 1
    return n - seen[a]


def boundary_period(sub: Substitution) -> int:
    """Eventual period in ``n`` of the first and last letters of ``iterate(n)``.

    The prefixes and suffixes of the iterates repeat with this period, so count
    differences across this lag cancel the boundary contribution.
    """
    rules = sub.rule_indices()
    start = sub.index(sub.seed)
    first = {a: int(rules[a][0]) for a in range(sub.size)}
    last = {a: int(rules[a][-1]) for a in range(sub.size)}
    return math.lcm(_cycle_length(first, start), _cycle_length(last, start))


def patch_frequency(sub: Substitution, pattern: Sequence[str] | Sequence[int],
                    tol: float = 1e-8, max_order: int = 40) -> FrequencyEstimate:
    """Frequency (occurrences per site) of ``pattern`` as a factor of the fixed point.

    Occurrences are counted exactly in ``iterate(n)`` for growing ``n``. A count is
    the frequency times the length plus a bounded boundary term that repeats with
    :func:`boundary_period` ``P``; the estimate at order ``n`` is therefore the
    ratio of count and length increments between orders ``n`` and ``n + P``.
    Estimates of consecutive orders are compared until their relative difference
    stays below ``tol`` twice in a row.
    """
    M = substitution_matrix(sub)
    if not is_primitive(M):
        raise SubstitutionError("patch frequencies need a primitive substitution")
    if len(pattern) and isinstance(pattern[0], str):
        pattern = parse_word(sub, pattern)
    pattern = np.asarray(pattern, dtype=np.int64)
    m = len(pattern)
    P = boundary_period(sub)
    data = {}

    def counted(n):
        if n not in data:
            data[n] = count_occurrences(sub, pattern, n)
        return data[n]

    prev = freq = None
    agreed = 0
    for n in range(max_order - P + 1):
        c0, l0 = counted(n)
        if l0 < 4 * m:
            continue
        c1, l1 = counted(n + P)
        prev, freq = freq, (c1 - c0) / (l1 - l0)
        if prev is None:
            continue
        scale = max(abs(freq), abs(prev))
        err = abs(freq - prev) / scale if scale > 0 else 0.0
        agreed = agreed + 1 if err < tol else 0
        if agreed == 2:
            return FrequencyEstimate(freq, err, n + P)
    raise ConvergenceError(
        f"pattern frequency not converged to {tol} by order {max_order}",
        estimates=(prev, freq),
    )
