"""Band structure of periodic approximants and gap labels of the aperiodic operator.

A period-``p`` operator has exactly ``p`` bands, the sets where the one-period
transfer trace satisfies ``|tr| <= 2``; the gap above band ``j`` has label ``j/p``.
Aperiodic gaps are the approximant gaps that persist across orders, labelled
independently by a Sturm count on a long window of the aperiodic word.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import _kernels
from ..errors import ConfigurationError, RefinementError
from .tightbinding import TightBindingModel, sturm_count_diag

EDGE_TOL = 1e-10
GAP_FLOOR = 1e-9          # approximant gaps narrower than this count as closed
DEFAULT_GRID = 2000


@dataclass
class Band:
    order: int
    index: int
    e_low: float
    e_high: float
    count: int = 1        # bands merged into this interval (touching bands)


@dataclass
class Gap:
    e_low: float
    e_high: float
    label: float
    order: int
    stable: bool = True
    deviation: float = math.nan
    bands_below: int = 0
    period: int = 0
    approximant_label: float = math.nan
    note: str = ""

    @property
    def width(self) -> float:
        return self.e_high - self.e_low

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.e_low + self.e_high)

    def to_dict(self) -> dict:
        return {"e_low": self.e_low, "e_high": self.e_high, "label": self.label,
                "order": self.order, "stable": self.stable}


@dataclass
class GapReport:
    gaps: list[Gap]
    bands: list[Band] = field(default_factory=list)
    orders: list[int] = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.gaps, self.gaps[1:]):
            if not a.e_high <= b.e_low:
                raise ValueError("gaps must be disjoint and ordered")

    @property
    def convergence(self) -> list[float]:
        return [g.deviation for g in self.gaps]

    def stable_gaps(self) -> list[Gap]:
        return [g for g in self.gaps if g.stable]

    def to_dict(self) -> dict:
        return {"gaps": [g.to_dict() for g in self.gaps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def write_bands_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["order", "band_index", "e_low", "e_high"])
        for b in self.bands:
            writer.writerow([b.order, b.index, f"{b.e_low:.12g}", f"{b.e_high:.12g}"])


# -- one-period quantities ------------------------------------------------------

def discriminant(diag: np.ndarray, energies) -> np.ndarray:
    """``|tr T_p(E)| - 2``: negative inside bands, positive in gaps."""
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    tr, _, logs = _kernels.period_traces(np.ascontiguousarray(diag, dtype=float), E)
    with np.errstate(over="ignore"):
        return np.abs(tr) * np.exp(logs) - 2.0


def floquet_edges(diag: np.ndarray) -> np.ndarray:
    """The ``2p`` sorted band edges: eigenvalues of the periodic and antiperiodic
    ``p x p`` Bloch matrices. Band ``i`` is ``[e[2i], e[2i+1]]``."""
    diag = np.asarray(diag, dtype=float)
    p = len(diag)
    out = []
    for sign in (1.0, -1.0):
        A = np.diag(diag)
        if p == 1:
            A[0, 0] += 2 * sign
        else:
            idx = np.arange(p - 1)
            A[idx, idx + 1] = 1.0
            A[idx + 1, idx] = 1.0
            A[0, p - 1] += sign
            A[p - 1, 0] += sign
        out.append(np.linalg.eigvalsh(A))
    return np.sort(np.concatenate(out))


def _bisect(diag: np.ndarray, outside: np.ndarray, inside: np.ndarray,
            tol: float = EDGE_TOL) -> np.ndarray:
    """Vectorized bisection between points with ``discriminant > 0`` (outside) and
    ``<= 0`` (inside)."""
    outside, inside = outside.astype(float).copy(), inside.astype(float).copy()
    while outside.size and np.max(np.abs(outside - inside)) > tol:
        mid = 0.5 * (outside + inside)
        f = discriminant(diag, mid)
        out = f > 0
        outside[out] = mid[out]
        inside[~out] = mid[~out]
    return 0.5 * (outside + inside)


def _polish_edges(diag: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Refine eigenvalue edges as sign changes of the discriminant where a clean
    bracket exists; edges of closed gaps are left as computed."""
    edges = edges.copy()
    n = len(edges)
    lower = np.arange(0, n, 2)        # band lower edges: band lies to the right
    widths = edges[1::2] - edges[0::2]
    gaps = np.concatenate([[np.inf], edges[2::2] - edges[1:-1:2], [np.inf]])
    delta = np.minimum(1e-7, 0.25 * np.minimum(widths, np.minimum(gaps[:-1], gaps[1:])))
    for which, direction in ((lower, 1.0), (lower + 1, -1.0)):
        d = delta
        e = edges[which]
        ok = d > 2 * EDGE_TOL
        inside = e + direction * d
        outside = e - direction * d
        f_in = discriminant(diag, inside[ok])
        f_out = discriminant(diag, outside[ok])
        good = np.flatnonzero(ok)[(f_in <= 0) & (f_out > 0)]
        sel = np.isin(np.flatnonzero(ok), good)
        edges[which[good]] = _bisect(diag, outside[ok][sel], inside[ok][sel])
    return edges


def _bands_below(diag: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Exact number of bands below energies that lie in gaps, from a Dirichlet
    Sturm count on several periods (boundary error at most one eigenvalue)."""
    p = len(diag)
    M = max(3, -(-4096 // p))
    counts = sturm_count_diag(np.tile(diag, M), np.asarray(energies, dtype=float))
    return np.rint(np.asarray(counts) / M).astype(int)


def _floquet_bands(diag: np.ndarray) -> list[tuple[float, float, int]]:
    e = _polish_edges(diag, floquet_edges(diag))
    return [(e[2 * i], e[2 * i + 1], 1) for i in range(len(diag))]


def _grid_bands(diag: np.ndarray, n_grid: int, max_refine: int) -> list[tuple[float, float, int]]:
    """Bands from sign changes of the discriminant on an adaptively refined grid.

    Each run of grid points inside bands is checked against the exact band count
    between the neighbouring gap points; a count that no refinement resolves
    raises :class:`RefinementError`.
    """
    lo, hi = diag.min() - 2.5, diag.max() + 2.5
    runs: list[tuple[float, float, int]] = []

    def scan(a: float, b: float, na: int, nb: int, depth: int) -> None:
        E = np.linspace(a, b, n_grid)
        f = discriminant(diag, E)
        f[0] = f[-1] = 1.0                     # a and b are known gap points
        gap_pts = np.flatnonzero(f > 0)
        labels = _bands_below(diag, E[gap_pts])
        labels[0], labels[-1] = na, nb
        for (i, li), (j, lj) in zip(zip(gap_pts, labels), zip(gap_pts[1:], labels[1:])):
            jump = lj - li
            if j == i + 1:
                if jump == 0:
                    continue
                if depth >= max_refine:
                    raise RefinementError(
                        f"grid too coarse: {jump} band(s) unresolved in [{E[i]!r}, {E[j]!r}]",
                        (float(E[i]), float(E[j])))
                scan(E[i], E[j], li, lj, depth + 1)
                continue
            if jump <= 0:
                if depth >= max_refine:
                    raise RefinementError(
                        f"inconsistent band count in [{E[i]!r}, {E[j]!r}]", (float(E[i]), float(E[j])))
                scan(E[i], E[j], li, lj, depth + 1)
                continue
            if jump > 1 and depth < max_refine:
                finer = np.linspace(E[i], E[j], n_grid)
                if np.any(discriminant(diag, finer[1:-1]) > 0):
                    scan(E[i], E[j], li, lj, depth + 1)
                    continue
            left = _bisect(diag, E[[i]], E[[i + 1]])[0]
            right = _bisect(diag, E[[j]], E[[j - 1]])[0]
            runs.append((left, right, int(jump)))

    scan(lo, hi, 0, len(diag), 0)
    runs.sort()
    return runs


def band_structure(model: TightBindingModel, order: int, method: str = "floquet",
                   n_grid: int = DEFAULT_GRID, max_refine: int = 12) -> GapReport:
    """Bands and labelled gaps of the period-``p`` approximant ``p = |iterate(order)|``.

    ``method="floquet"`` seeds the edges with the periodic/antiperiodic eigenvalues
    (all ``p`` bands, exact count) and refines them by bisection of ``|tr| - 2``;
    ``method="grid"`` scans an ``n_grid``-point energy grid and refines adaptively.
    """
    diag = model.diagonal(model.approximant_letters(order))
    p = len(diag)
    if method == "floquet":
        raw = _floquet_bands(diag)
    elif method == "grid":
        raw = _grid_bands(diag, n_grid, max_refine)
    else:
        raise ConfigurationError(f"unknown band method {method!r}")
    bands, gaps = [], []
    below = 0
    for idx, (lo, hi, count) in enumerate(raw):
        bands.append(Band(order, below, float(lo), float(hi), count))
        below += count
        if idx + 1 < len(raw):
            nxt = raw[idx + 1][0]
            if nxt - hi > GAP_FLOOR:
                gaps.append(Gap(float(hi), float(nxt), below / p, order, True, 0.0,
                                below, p, below / p))
    return GapReport(gaps, bands, [order])


# -- aperiodic gaps -------------------------------------------------------------

def _overlap(a: Gap, b: Gap) -> float:
    return min(a.e_high, b.e_high) - max(a.e_low, b.e_low)


def _mutual_links(later: list[Gap], earlier: list[Gap]) -> tuple[dict[int, int], set[int]]:
    """Link each later gap to the earlier gap it overlaps most, when that choice is
    mutual. Returns the links and the later gaps that overlapped something but lost."""
    if not later or not earlier:
        return {}, set()
    ov = np.array([[_overlap(g, h) for h in earlier] for g in later])
    best_e = ov.argmax(axis=1)
    best_l = ov.argmax(axis=0)
    links, lost = {}, set()
    for i, j in enumerate(best_e):
        if ov[i, j] <= 0:
            continue
        if best_l[j] == i:
            links[i] = int(j)
        else:
            lost.add(i)
    return links, lost


def aperiodic_gap_labels(model: TightBindingModel, orders: Sequence[int], tol: float = 1e-4,
                         window: int = 2 ** 16, edge_tol: float = 1e-3,
                         min_width: float = 1e-3) -> GapReport:
    """Gaps of the aperiodic operator, tracked through approximants of increasing order.

    Every gap of the last approximant wider than ``min_width`` is followed back
    through the earlier orders, linking gaps of consecutive orders that are each
    other's largest overlap. A gap that overlaps an earlier gap but loses it to a
    neighbour is an overlap conflict. A gap is ``stable`` when

    * it has no conflict and is linked over at least the last three orders,
    * its edges move by at most ``edge_tol`` between the last two orders,
    * Sturm counts on a ``window``-site stretch of the aperiodic word, taken at
      the midpoints of the gap in the last two orders, agree within ``tol``,
    * that Sturm label agrees with the approximant label ``j/p`` within ``tol + 1/p``.

    The reported label is the Sturm label at the last midpoint.
    """
    orders = [int(n) for n in orders]
    if len(orders) < 3:
        raise ConfigurationError("need at least 3 approximant orders")
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise ConfigurationError("orders must be increasing")
    if tol <= 0 or edge_tol <= 0:
        raise ConfigurationError("tolerances must be positive")
    reports = [band_structure(model, n) for n in orders]
    per_order = [[g for g in r.gaps if g.width > min_width / 4] for r in reports]
    per_order[-1] = [g for g in reports[-1].gaps if g.width > min_width]

    chains = [[g] for g in per_order[-1]]
    notes = [""] * len(chains)
    position = list(range(len(chains)))   # index of each chain's head in the current order
    for level in range(len(orders) - 1, 0, -1):
        links, lost = _mutual_links(per_order[level], per_order[level - 1])
        for c, pos in enumerate(position):
            if pos is None:
                continue
            if pos in lost and not notes[c]:
                notes[c] = f"overlap conflict at order {orders[level - 1]}"
            if pos in links:
                chains[c].append(per_order[level - 1][links[pos]])
                position[c] = links[pos]
            else:
                position[c] = None

    diag = model.diagonal(model.window_letters(window))
    mids_last = np.array([c[0].midpoint for c in chains])
    mids_prev = np.array([c[1].midpoint if len(c) > 1 else c[0].midpoint for c in chains])
    lab_last = np.asarray(sturm_count_diag(diag, mids_last)) / window if chains else np.array([])
    lab_prev = np.asarray(sturm_count_diag(diag, mids_prev)) / window if chains else np.array([])

    gaps = []
    for chain, note, l1, l0 in zip(chains, notes, lab_last, lab_prev):
        g = chain[0]
        dev = (max(abs(g.e_low - chain[1].e_low), abs(g.e_high - chain[1].e_high))
               if len(chain) > 1 else math.inf)
        if not note:
            if len(chain) < 3:
                note = "not present in three consecutive orders"
            elif dev > edge_tol:
                note = f"edges not converged ({dev:.3g})"
            elif abs(l1 - l0) > tol:
                note = f"window labels disagree ({abs(l1 - l0):.3g})"
            elif abs(l1 - g.approximant_label) > tol + 1.0 / g.period:
                note = "window label far from approximant label"
        gaps.append(Gap(g.e_low, g.e_high, float(l1), g.order, not note, dev,
                        g.bands_below, g.period, g.approximant_label, note))
    return GapReport(gaps, reports[-1].bands, orders)


def gap_labels_over_coupling(model: TightBindingModel, couplings: Sequence[float],
                             reference: float, order: int, window: int = 2 ** 16,
                             step: float = 0.05, min_width: float = 1e-3) -> dict[int, dict[float, float]]:
    """Follow the gaps of the order-``n`` approximant at coupling ``reference`` to
    each coupling in ``couplings`` in steps of at most ``step``.

    A gap is identified by its approximant band count ``j``, which cannot change
    while the gap stays open; it is dropped once it closes (width below
    ``GAP_FLOOR``) at any intermediate coupling. Returns
    ``{j: {coupling: window Sturm label at the gap midpoint}}``.
    """
    def open_gaps(lam: float) -> dict[int, Gap]:
        rep = band_structure(model.with_coupling(lam), order)
        return {g.bands_below: g for g in rep.gaps}

    start = {j: g for j, g in open_gaps(reference).items() if g.width > min_width}
    alive = {c: set(start) for c in couplings}
    mids: dict[float, dict[int, float]] = {}
    for c in couplings:
        n = max(1, int(math.ceil(abs(c - reference) / step - 1e-9)))
        gaps = open_gaps(reference)
        for lam in np.linspace(reference, c, n + 1)[1:]:
            gaps = open_gaps(float(lam))
            alive[c] &= set(gaps)
        mids[c] = {j: gaps[j].midpoint for j in alive[c]}
    out: dict[int, dict[float, float]] = {j: {} for j in start}
    for c in couplings:
        m = model.with_coupling(c)
        diag = m.diagonal(m.window_letters(window))
        js = sorted(mids[c])
        if js:
            counts = sturm_count_diag(diag, np.array([mids[c][j] for j in js]))
            for j, cnt in zip(js, np.atleast_1d(counts)):
                out[j][c] = cnt / window
    return {j: v for j, v in out.items() if len(v) == len(couplings)}
