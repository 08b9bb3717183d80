"""Persistence pairs by boundary-matrix reduction and by union-find.

Every pair keeps the simplex that created its class and the simplex that
destroyed it, so diagram points can be mapped back to the filtration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .filtration import Filtration


class InternalConsistencyError(RuntimeError):
    """The filtration handed to the reduction violates its invariants."""


@dataclass(frozen=True)
class PersistencePair:
    """One diagram point with its creator and destroyer simplices.

    ``birth`` and ``death`` are in reported coordinates, so for superlevel
    filtrations ``birth >= death`` and essential classes die at ``-inf``.
    ``destroyer`` is None for essential classes.
    """

    dim: int
    birth: float
    death: float
    creator: int
    destroyer: int | None = None
    capped: bool = False

    @property
    def essential(self) -> bool:
        return self.destroyer is None and not self.capped

    @property
    def lifetime(self) -> float:
        if self.essential:
            return np.inf
        return abs(self.death - self.birth)

    @property
    def zero(self) -> bool:
        """True for finite pairs with birth equal to death."""
        return not self.essential and self.death == self.birth


class PersistenceDiagram:
    """Persistence pairs grouped by dimension, in lifetime order.

    Within each dimension, essential classes come first, then finite pairs by
    decreasing lifetime; remaining ties are broken by the filtration position
    of the creator.
    """

    def __init__(self, filtration: Filtration, pairs: list[PersistencePair], max_dim: int):
        self.filtration = filtration
        self.max_dim = max_dim
        self.direction = filtration.direction
        self.n_simplices = len(filtration)
        last = int(filtration.order[-1]) if len(filtration) else -1
        self.final_simplex = last
        self.final_value = float(filtration.reported_values[last]) if last >= 0 else 0.0
        pos = filtration.position
        self._pairs: dict[int, list[PersistencePair]] = {k: [] for k in range(max_dim + 1)}
        for p in pairs:
            self._pairs.setdefault(p.dim, []).append(p)
        for k in self._pairs:
            self._pairs[k].sort(key=lambda p: (not p.essential, -p.lifetime, int(pos[p.creator])))

    def __getitem__(self, k: int) -> list[PersistencePair]:
        return self._pairs.get(k, [])

    def __iter__(self) -> Iterator[PersistencePair]:
        for k in sorted(self._pairs):
            yield from self._pairs[k]

    def __len__(self) -> int:
        return sum(len(v) for v in self._pairs.values())

    def __repr__(self) -> str:
        counts = {k: len(v) for k, v in sorted(self._pairs.items())}
        return f"PersistenceDiagram({self.direction}, counts={counts})"

    @property
    def dims(self) -> list[int]:
        return sorted(self._pairs)

    def indexed(self, k: int, include_zero: bool = False, cap: bool = False) -> list[PersistencePair]:
        """The lifetime-ordered index set of dimension ``k``.

        Zero-persistence pairs are dropped unless ``include_zero``. With
        ``cap``, essential classes are closed off at the end of the filtration:
        their death becomes the last simplex's value and that simplex acts as
        destroyer.
        """
        out = []
        for p in self[k]:
            if p.zero and not include_zero:
                continue
            if cap and p.essential:
                p = replace(p, death=self.final_value, destroyer=self.final_simplex, capped=True)
            out.append(p)
        return out

    def points(self, k: int, essential: bool = False) -> np.ndarray:
        """``(m, 2)`` array of (birth, death); essential rows only if asked."""
        rows = [(p.birth, p.death) for p in self[k] if essential or not p.essential]
        return np.asarray(rows, dtype=float).reshape(len(rows), 2)

    def betti_at(self, k: int, alpha: float) -> int:
        """Number of ``k``-classes alive at internal filtration value ``alpha``."""
        s = self.filtration.sign
        count = 0
        for p in self[k]:
            b = s * p.birth
            d = np.inf if p.essential else s * p.death
            if b <= alpha < d:
                count += 1
        return count


def _check_order(filt: Filtration) -> None:
    cx = filt.complex
    pos = filt.position
    for d in range(1, cx.max_dimension + 1):
        idx = cx.indices(d)
        if len(idx) and np.any(pos[cx.faces[d]].max(axis=1) > pos[idx]):
            raise InternalConsistencyError(f"a face follows its coface in dimension {d}")


def _reduce_columns(filt: Filtration, d: int, cleared: np.ndarray, pivots: dict,
                    remaining: int | None = None) -> list[tuple[int, int]]:
    """Reduce the columns of the ``d``-simplices left to right.

    Returns (creator position, destroyer position) pairs. ``remaining`` is the
    number of possible lows left; reduction stops once they are all used.
    """
    cx = filt.complex
    pos = filt.position
    idx = cx.indices(d)
    if not len(idx):
        return []
    col_pos = pos[idx]
    face_pos = pos[cx.faces[d]]
    found = []
    for r in np.argsort(col_pos, kind="stable").tolist():
        if remaining is not None and remaining <= 0:
            break
        j = int(col_pos[r])
        if cleared[j]:
            continue
        col = set(face_pos[r].tolist())
        while col:
            low = max(col)
            owner = pivots.get(low)
            if owner is None:
                break
            col ^= owner
        if col:
            low = max(col)
            pivots[low] = col
            cleared[low] = True
            found.append((low, j))
            if remaining is not None:
                remaining -= 1
    return found


def _make_pairs(filt: Filtration, raw: list[tuple[int, int]], negative: np.ndarray, max_dim: int):
    cx = filt.complex
    order = filt.order
    rep = filt.reported_values
    pairs = []
    for lo, j in raw:
        c, t = int(order[lo]), int(order[j])
        pairs.append(PersistencePair(int(cx.dims[c]), float(rep[c]), float(rep[t]), c, t))
    # negative[i]: simplex i (by position) is a destroyer or a paired creator
    for posn in np.nonzero(~negative)[0].tolist():
        c = int(order[posn])
        dim = int(cx.dims[c])
        if dim <= max_dim:
            pairs.append(PersistencePair(dim, float(rep[c]), filt.sign * np.inf, c, None))
    return pairs


def reduce(filt: Filtration, max_dim: int | None = None) -> PersistenceDiagram:
    """Persistence diagram in dimensions ``0..max_dim`` by column reduction.

    Columns of the boundary matrix are reduced left to right in filtration
    order over the two-element field, highest dimension first; the columns
    of simplices already known to be creators are cleared (the twist).
    """
    cx = filt.complex
    if max_dim is None:
        max_dim = cx.max_dimension
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    _check_order(filt)
    top = min(max_dim + 1, cx.max_dimension)
    cleared = np.zeros(len(filt), dtype=bool)
    pivots: dict[int, set] = {}
    raw = []
    for d in range(top, 0, -1):
        raw += _reduce_columns(filt, d, cleared, pivots)
    status = np.zeros(len(filt), dtype=bool)
    for lo, j in raw:
        status[lo] = status[j] = True
    # simplices of dimension max_dim + 1 only ever count as destroyers
    status[filt.position[cx.dims > max_dim]] = True
    return PersistenceDiagram(filt, _make_pairs(filt, raw, status, max_dim), max_dim)


class _UnionFind:
    def __init__(self, n: int, age: np.ndarray):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.oldest = list(range(n))
        self.age = age

    def find(self, x: int) -> int:
        root = x
        parent = self.parent
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, ru: int, rv: int) -> None:
        if self.rank[ru] < self.rank[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        if self.rank[ru] == self.rank[rv]:
            self.rank[ru] += 1
        a, b = self.oldest[ru], self.oldest[rv]
        self.oldest[ru] = a if self.age[a] < self.age[b] else b


def _union_find_pairs(filt: Filtration) -> tuple[list[tuple[int, int]], np.ndarray]:
    cx = filt.complex
    pos = filt.position
    n = cx.n_vertices
    uf = _UnionFind(n, pos)
    idx = cx.indices(1)
    raw = []
    if len(idx):
        ends = cx.vertex_array(1)
        for r in np.argsort(pos[idx], kind="stable").tolist():
            u, v = int(ends[r, 0]), int(ends[r, 1])
            ru, rv = uf.find(u), uf.find(v)
            if ru == rv:
                continue
            ou, ov = uf.oldest[ru], uf.oldest[rv]
            younger = ou if pos[ou] > pos[ov] else ov
            raw.append((int(pos[younger]), int(pos[idx[r]])))
            uf.union(ru, rv)
    status = np.zeros(len(filt), dtype=bool)
    for lo, j in raw:
        status[lo] = status[j] = True
    return raw, status


def pd0_union_find(filt: Filtration) -> PersistenceDiagram:
    """Dimension-0 diagram by union-find with the elder rule.

    Edges are processed in filtration order; a merge kills the component
    whose oldest vertex comes later in the order.
    """
    raw, status = _union_find_pairs(filt)
    status[filt.position[filt.complex.dims > 0]] = True
    return PersistenceDiagram(filt, _make_pairs(filt, raw, status, 0), 0)


def compute_persistence(filt: Filtration, max_dim: int = 1) -> PersistenceDiagram:
    """Fast path used by the optimisation loops.

    Dimension 0 comes from union-find; higher dimensions reduce the
    boundary columns bottom-up, stopping each dimension as soon as every
    unpaired lower-dimensional simplex has been killed.
    """
    cx = filt.complex
    _check_order(filt)
    top = min(max_dim + 1, cx.max_dimension)
    raw, status = _union_find_pairs(filt)
    pivots: dict[int, set] = {}
    pos = filt.position
    no_clear = np.zeros(len(filt), dtype=bool)
    for d in range(2, top + 1):
        free = int(np.count_nonzero(~status[pos[cx.indices(d - 1)]]))
        new = _reduce_columns(filt, d, no_clear, pivots, remaining=free)
        for lo, j in new:
            status[lo] = status[j] = True
        raw += new
    status[pos[cx.dims > max_dim]] = True
    return PersistenceDiagram(filt, _make_pairs(filt, raw, status, max_dim), max_dim)
