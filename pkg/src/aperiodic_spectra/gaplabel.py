"""Finitely generated real modules, membership tests and the Bragg-to-gap map.

A :class:`RealModule` is the set of sums ``sum_i c_i g_i`` where the coefficients
``c_i`` are integers, or, with denominator primes ``P``, elements of
``Z[1/p : p in P]``. Generators may carry an exact descriptor in ``Q(tau)``
(``tau`` the golden mean), written like ``"1"``, ``"1/3"``, ``"tau^-1"`` or
``"2/3*tau"``, which lets index computations run in exact arithmetic.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, UnsupportedError

TAU = (1 + math.sqrt(5)) / 2
TWO_PI = 2 * math.pi
RELATION_BOUND = 10 ** 6
# Float generators count as rationally related when their ratio is within 1e-12 of
# p/q with q below this bound. Dirichlet's theorem makes any irrational ratio that
# close to some p/q with q near 1e6, so the bound must stay far below that.
RATIO_DENOMINATOR = 10 ** 4
SCALES = {"1": 1.0, "2pi": TWO_PI}


# -- exact arithmetic in Q(tau) -----------------------------------------------

@dataclass(frozen=True)
class QTau:
    """``a + b tau`` with rational ``a, b``."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __add__(self, other: "QTau") -> "QTau":
        return QTau(self.a + other.a, self.b + other.b)

    def __mul__(self, other) -> "QTau":
        if isinstance(other, QTau):
            # tau^2 = tau + 1
            bb = self.b * other.b
            return QTau(self.a * other.a + bb, self.a * other.b + self.b * other.a + bb)
        r = Fraction(other)
        return QTau(self.a * r, self.b * r)

    __rmul__ = __mul__

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * TAU

    def is_rational(self) -> bool:
        return self.b == 0

    def __str__(self) -> str:
        parts = []
        if self.a:
            parts.append(str(self.a))
        if self.b:
            coef = "" if self.b == 1 else "-" if self.b == -1 else f"{self.b}*"
            parts.append(f"{coef}tau")
        if len(parts) == 2 and parts[1].startswith("-"):
            return f"{parts[0]} - {parts[1][1:]}"
        return " + ".join(parts).replace("+ -", "- ") or "0"


_POW = r"tau(?:\^\(?(-?\d+)\)?)?"
_TERM = re.compile(r"([+-]?)(?:(\d+(?:\.\d+)?(?:/\d+)?)(?:\*" + _POW + r")?|" + _POW.replace("(-?", "(?P<p2>-?") + r")")


def _tau_power(n: int) -> QTau:
    base = QTau(Fraction(0), Fraction(1)) if n >= 0 else QTau(Fraction(-1), Fraction(1))
    out = QTau(Fraction(1))
    for _ in range(abs(n)):
        out = out * base
    return out


def parse_exact(text: str) -> QTau:
    """Parse sums of terms ``p/q``, ``tau^n`` and ``p/q*tau^n`` (``n`` may be negative),
    for example ``"1/3"``, ``"tau^-1"``, ``"-1 + tau"``."""
    s = text.replace(" ", "")
    total, pos = QTau(), 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (pos > 0 and not m.group(1)):
            raise ConfigurationError(f"cannot parse exact descriptor {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        if m.group(2) is not None:
            term = QTau(Fraction(m.group(2)))
            if m.group(0).find("tau") >= 0:
                term = term * _tau_power(int(m.group(3) or 1))
        else:
            term = _tau_power(int(m.group("p2") or 1))
        total = total + term * sign
        pos = m.end()
    if pos == 0:
        raise ConfigurationError("empty exact descriptor")
    return total


# -- modules --------------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    value: float
    exact: str | None = None

    def __post_init__(self):
        value = self.value
        if self.exact is not None:
            x = float(parse_exact(self.exact))
            if value is None:
                value = x
            elif abs(x - value) > 1e-9 * max(1.0, abs(x)):
                raise ConfigurationError(f"generator value {value} does not match exact {self.exact!r}")
        if value is None or not math.isfinite(value):
            raise ConfigurationError("generator value must be finite")
        object.__setattr__(self, "value", float(value))

    def exact_value(self) -> QTau | None:
        return None if self.exact is None else parse_exact(self.exact)


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, int(math.isqrt(p)) + 1))


def _independent(g: Generator, h: Generator) -> bool:
    ge, he = g.exact_value(), h.exact_value()
    if ge is not None and he is not None:
        return ge.a * he.b != ge.b * he.a
    ratio = g.value / h.value
    approx = Fraction(ratio).limit_denominator(RATIO_DENOMINATOR)
    return abs(float(approx) - ratio) > 1e-12 * max(1.0, abs(ratio))


@dataclass(frozen=True)
class RealModule:
    """Generators are given in units of ``scale`` (``"1"`` or ``"2pi"``)."""

    generators: tuple[Generator, ...] = ()
    denominator_primes: tuple[int, ...] = ()
    scale: str = "1"

    def __post_init__(self):
        gens = tuple(g if isinstance(g, Generator) else Generator(*g) if isinstance(g, tuple)
                     else Generator(float(g)) for g in self.generators)
        primes = tuple(sorted(set(int(p) for p in self.denominator_primes)))
        if any(not _is_prime(p) for p in primes):
            raise ConfigurationError(f"denominator primes must be prime, got {primes}")
        if self.scale not in SCALES:
            raise ConfigurationError(f"scale must be one of {sorted(SCALES)}, got {self.scale!r}")
        if any(g.value == 0 for g in gens):
            raise ConfigurationError("generators must be nonzero")
        for i in range(len(gens)):
            for j in range(i):
                if not _independent(gens[i], gens[j]):
                    raise ConfigurationError(
                        f"generators {gens[j].value} and {gens[i].value} are rationally dependent")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "denominator_primes", primes)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def scale_factor(self) -> float:
        return SCALES[self.scale]

    def values(self) -> np.ndarray:
        """Generators as real numbers (display value times scale)."""
        return np.array([g.value for g in self.generators]) * self.scale_factor

    def element(self, coefficients: Sequence) -> float:
        return float(sum(float(c) * g for c, g in zip(coefficients, self.values())))

    def to_dict(self) -> dict:
        return {"generators": [{"value": g.value, **({"exact": g.exact} if g.exact else {})}
                               for g in self.generators],
                "denominator_primes": list(self.denominator_primes), "scale": self.scale}

    @classmethod
    def from_dict(cls, data: Mapping) -> "RealModule":
        try:
            gens = tuple(Generator(g.get("value"), g.get("exact")) for g in data.get("generators", []))
        except AttributeError:
            raise ConfigurationError("generators must be objects with 'value' and/or 'exact'") from None
        return cls(gens, tuple(data.get("denominator_primes", [])), data.get("scale", "1"))

    @classmethod
    def from_json(cls, text: str) -> "RealModule":
        return cls.from_dict(json.loads(text))


def dyadic_module(q: int = 1, scale: str = "1") -> RealModule:
    """``{m / (q 2^n)}``."""
    return RealModule((Generator(1 / q, f"1/{q}" if q != 1 else "1"),), (2,), scale)


def golden_module(scale: str = "1") -> RealModule:
    """``Z + Z tau^-1``."""
    return RealModule((Generator(1.0, "1"), Generator(1 / TAU, "tau^-1")), (), scale)


# -- membership -----------------------------------------------------------------

@dataclass(frozen=True)
class MembershipResult:
    found: bool
    coefficients: tuple[Fraction, ...] | None
    residual: float
    tol: float
    coeff_bound: int

    def __bool__(self) -> bool:
        return self.found

    def to_dict(self) -> dict:
        if not self.found:
            return {"result": "not found", "tol": self.tol, "coeff_bound": self.coeff_bound}
        return {"result": "found", "coefficients": [str(c) for c in self.coefficients],
                "residual": self.residual}


def smooth_numbers(primes: Iterable[int], limit: int) -> list[int]:
    """All positive integers ``<= limit`` whose prime factors lie in ``primes``."""
    out = {1}
    for p in primes:
        grown = set(out)
        for n in out:
            m = n * p
            while m <= limit:
                grown.add(m)
                m *= p
        out = grown
    return sorted(out)


def membership(x: float, m: RealModule, tol: float = 1e-9,
               coeff_bound: int = RELATION_BOUND) -> MembershipResult:
    """Find coefficients ``c`` with ``|sum c_i g_i - x| < tol``.

    Coefficients are ``a_i / D`` with integer numerators ``|a_i| <= coeff_bound``
    and ``D`` running over the ``P``-smooth numbers up to ``coeff_bound`` (only
    ``D = 1`` without denominator primes). The smallest such ``D`` wins, then the
    smallest numerators. A negative answer only means nothing was found within
    these bounds.
    """
    if not tol > 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    r = m.rank
    if r > 2 and m.denominator_primes:
        raise UnsupportedError(f"membership with denominator closure supports rank <= 2, got {r}")
    if r > 2 and (2 * coeff_bound + 1) ** (r - 1) > 5 * 10 ** 7:
        raise UnsupportedError(f"exhaustive search over rank {r} with bound {coeff_bound} is too large")
    g = m.values()
    x = float(x)
    miss = MembershipResult(False, None, math.inf, tol, coeff_bound)
    if r == 0:
        return MembershipResult(True, (), abs(x), tol, coeff_bound) if abs(x) < tol else miss
    for D in smooth_numbers(m.denominator_primes, coeff_bound):
        target = x * D
        if r == 1:
            a = np.array([[round(target / g[0])]], dtype=np.int64)
        else:
            rest = np.stack(np.meshgrid(*[np.arange(-coeff_bound, coeff_bound + 1)] * (r - 1),
                                        indexing="ij"), axis=-1).reshape(-1, r - 1)
            first = np.rint((target - rest @ g[1:]) / g[0]).astype(np.int64)
            a = np.column_stack([first, rest])
        a = a[np.all(np.abs(a) <= coeff_bound, axis=1)]
        if not len(a):
            continue
        resid = np.abs(a @ g / D - x)
        ok = resid < tol
        if ok.any():
            cand = a[ok]
            res = resid[ok]
            best = np.lexsort((res, np.abs(cand).max(axis=1)))[0]
            coeffs = tuple(Fraction(int(v), D) for v in cand[best])
            return MembershipResult(True, coeffs, float(res[best]), tol, coeff_bound)
    return miss


# -- subgroup index -----------------------------------------------------------

def _solve_rational(columns: list[tuple[Fraction, Fraction]],
                    target: tuple[Fraction, Fraction]) -> list[Fraction] | None:
    """Rational ``c`` with ``sum c_j columns[j] = target`` in ``Q^2``, or None."""
    if len(columns) == 1:
        (u, v), (s, t) = columns[0], target
        if u * t != v * s:
            return None
        return [s / u if u else t / v]
    (u1, v1), (u2, v2) = columns
    det = u1 * v2 - u2 * v1
    s, t = target
    return [(s * v2 - u2 * t) / det, (u1 * t - s * v1) / det]


def _strip(n: int, primes: Sequence[int]) -> int:
    for p in primes:
        while n and n % p == 0:
            n //= p
    return n


def _det(rows: list[list[Fraction]]) -> Fraction:
    if len(rows) == 1:
        return rows[0][0]
    return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]


def _coefficient_matrix(a: RealModule, b: RealModule) -> list[list[Fraction]] | None:
    exact_a = [g.exact_value() for g in a.generators]
    exact_b = [g.exact_value() for g in b.generators]
    if all(e is not None for e in exact_a + exact_b) and b.rank <= 2:
        cols = [(e.a, e.b) for e in exact_b]
        rows = []
        for e in exact_a:
            c = _solve_rational(cols, (e.a, e.b))
            if c is None:
                return None
            rows.append(c)
        return rows
    if a.rank == 1 and b.rank == 1:
        ratio = a.generators[0].value / b.generators[0].value
        approx = Fraction(ratio).limit_denominator(RATIO_DENOMINATOR)
        if abs(float(approx) - ratio) > 1e-12 * max(1.0, abs(ratio)):
            return None
        return [[approx]]
    return None


def subgroup_index(a: RealModule, b: RealModule) -> int | str:
    """Index of ``a`` in ``b``: a positive integer, ``"infinite"`` when ``a`` is a
    subgroup of smaller rank, ``"incomparable"`` when ``a`` is not found inside ``b``.

    Each generator of ``a`` is written over the generators of ``b`` with rational
    coefficients (exactly when descriptors are present); ``a`` lies in ``b`` when
    those coefficients have denominators built from ``b``'s primes and ``a``'s
    primes are among ``b``'s. For equal ranks the index is ``|det C|`` with all
    factors of ``b``'s primes removed, as those primes act invertibly on ``b``.
    """
    if a.scale != b.scale:
        return "incomparable"
    if a.rank == 0:
        return 1 if b.rank == 0 else "infinite"
    if b.rank == 0 or a.rank > b.rank:
        return "incomparable"
    C = _coefficient_matrix(a, b)
    if C is None:
        return "incomparable"
    P = b.denominator_primes
    if not set(a.denominator_primes) <= set(P):
        return "incomparable"
    if any(_strip(c.denominator, P) != 1 for row in C for c in row):
        return "incomparable"
    if a.rank < b.rank:
        return "infinite"
    d = _det(C) if a.rank <= 2 else None
    if d is None or d == 0:
        return "incomparable"
    num, den = _strip(abs(d.numerator), P), _strip(d.denominator, P)
    if den != 1:
        return "incomparable"
    return num


# -- Bragg-to-gap map -------------------------------------------------------------

def bragg_to_gap_1d(k: float) -> float:
    return k / TWO_PI


def _bareiss(M: list[list]) -> object:
    """Determinant by fraction-free elimination with row pivoting. Exact for
    integer or Fraction entries."""
    n = len(M)
    A = [list(row) for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        piv = max(range(k, n), key=lambda i: abs(A[i][k]))
        if A[piv][k] == 0:
            return 0
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = A[i][j] * A[k][k] - A[i][k] * A[k][j]
                A[i][j] = num / prev if not isinstance(num, Rational) else Fraction(num) / prev
            A[i][k] = 0
        prev = A[k][k]
    det = sign * A[n - 1][n - 1]
    if isinstance(det, Fraction) and det.denominator == 1:
        return int(det)
    return det


def bragg_to_gap_d(*vectors: Sequence, in_units_of_2pi: bool = False):
    """``det[k_1 ... k_d] / (2 pi)^d``.

    With ``in_units_of_2pi`` the vectors are given divided by ``2 pi`` and the plain
    determinant is returned, exactly (int or Fraction) for rational input.
    """
    d = len(vectors)
    if d < 1:
        raise ConfigurationError("need at least one vector")
    rows = [list(v) for v in vectors]
    if any(len(r) != d for r in rows):
        raise ConfigurationError(f"dimension mismatch: {d} vectors must each have {d} components")
    exact = all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for r in rows for x in r)
    if not exact:
        rows = [[float(x) for x in r] for r in rows]
    det = _bareiss(rows)
    if in_units_of_2pi:
        return det
    return float(det) / TWO_PI ** d


def rescale_for_tight_binding(m: RealModule, dens) -> RealModule:
    """Divide every generator by the site density ``dens``."""
    if not float(dens) > 0:
        raise ConfigurationError(f"density must be positive, got {dens}")
    exact_ok = isinstance(dens, (int, Fraction))
    gens = []
    for g in m.generators:
        e = g.exact_value()
        if exact_ok and e is not None:
            q = e * (1 / Fraction(dens))
            gens.append(Generator(g.value / float(dens), _format(q)))
        else:
            gens.append(Generator(g.value / float(dens)))
    return RealModule(tuple(gens), m.denominator_primes, m.scale)


def _format(q: QTau) -> str:
    return str(q)


def module_from_bragg(e_top: RealModule, d: int = 1) -> RealModule:
    """Image of a module of wave numbers under ``k -> k / 2 pi``."""
    if d != 1:
        raise UnsupportedError("module images are computed for d = 1; use bragg_to_gap_d for d > 1")
    if e_top.scale == "2pi":
        return RealModule(e_top.generators, e_top.denominator_primes, "1")
    gens = tuple(Generator(g.value / TWO_PI) for g in e_top.generators)
    return RealModule(gens, e_top.denominator_primes, "1")
