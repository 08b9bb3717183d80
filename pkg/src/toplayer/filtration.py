"""Filtrations: simplex values, a strict total order and gradient controllers.

Two extensions are supported. A lower-star filtration extends vertex values
to every simplex by taking the maximum over its vertices; a flag filtration
does the same with edge values. For every simplex we remember which vertex
(or edge) attains that maximum, so that derivatives with respect to simplex
values can be routed back to the underlying parameters.

Superlevel filtrations are handled by negating vertex values internally.
``Filtration.values`` are always the internal, sublevel values; reported
values are ``sign * values``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .complex import SimplicialComplex, build_freudenthal_grid, delaunay_2d

TieBreak = Literal["deterministic", "random"]
Direction = Literal["sublevel", "superlevel"]


@dataclass(frozen=True, eq=False)
class Filtration:
    """A complex with monotone simplex values and a strict order.

    Attributes
    ----------
    complex : SimplicialComplex
    values : ndarray
        Internal (sublevel) value of each simplex.
    order : ndarray
        Simplex indices in strict filtration order.
    position : ndarray
        Inverse of ``order``.
    controller : ndarray
        Per simplex, the parameter attaining its value: a vertex index for
        ``kind == "lower_star"``, the simplex index of an edge for
        ``kind == "flag"``, the simplex itself for ``kind == "generic"``.
        ``-1`` marks simplices with constant value (vertices of a flag
        filtration).
    kind : str
    direction : str
    """

    complex: SimplicialComplex
    values: np.ndarray
    order: np.ndarray
    position: np.ndarray
    controller: np.ndarray
    kind: str
    direction: str = "sublevel"
    meta: dict = field(default_factory=dict)

    @property
    def sign(self) -> float:
        return -1.0 if self.direction == "superlevel" else 1.0

    @property
    def reported_values(self) -> np.ndarray:
        return self.sign * self.values

    def __len__(self) -> int:
        return len(self.values)

    def sublevel_mask(self, alpha: float) -> np.ndarray:
        return self.values <= alpha

    def controller_edge(self, i: int) -> tuple[int, int]:
        """Vertex pair of the edge controlling simplex ``i`` (flag only)."""
        if self.kind != "flag":
            raise ValueError("controller edges exist only for flag filtrations")
        c = int(self.controller[i])
        if c < 0:
            raise ValueError(f"simplex {i} has constant value")
        u, v = self.complex.simplices[c]
        return u, v


def strict_order(cx: SimplicialComplex, values: np.ndarray, tie_break: TieBreak = "deterministic",
                 seed: int | None = None) -> np.ndarray:
    """Sort simplices by ``(value, dimension, vertex tuple)``.

    Simplex indices are already sorted by ``(dimension, vertex tuple)``, so the
    last key is the index itself. In ``"random"`` mode the last key is a
    seeded random permutation instead; faces still precede cofaces because of
    the dimension key.
    """
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("filtration values must be finite")
    m = len(values)
    if tie_break == "deterministic":
        last = np.arange(m)
    elif tie_break == "random":
        last = np.random.default_rng(seed).permutation(m)
    else:
        raise ValueError(f"unknown tie_break {tie_break!r}")
    return np.lexsort((last, cx.dims, values))


def check_monotone(cx: SimplicialComplex, values: np.ndarray) -> None:
    for d in range(1, cx.max_dimension + 1):
        idx = cx.indices(d)
        if len(idx) and np.any(values[cx.faces[d]].max(axis=1) > values[idx]):
            raise ValueError(f"filtration is not monotone in dimension {d}")


def _assemble(cx, values, base_dim, kind, direction, tie_break, seed, meta=None) -> Filtration:
    order = strict_order(cx, values, tie_break, seed)
    position = np.empty_like(order)
    position[order] = np.arange(len(order))
    controller = np.full(len(cx), -1, dtype=np.int64)
    base = cx.indices(base_dim)
    controller[base] = base
    for d in range(base_dim + 1, cx.max_dimension + 1):
        idx = cx.indices(d)
        if not len(idx):
            continue
        cand = controller[cx.faces[d]]
        pick = np.argmax(position[cand], axis=1)
        controller[idx] = cand[np.arange(len(idx)), pick]
    return Filtration(cx, values, order, position, controller, kind, direction, meta or {})


def lower_star(cx: SimplicialComplex, field, direction: Direction = "sublevel",
               tie_break: TieBreak = "deterministic", seed: int | None = None) -> Filtration:
    """Lower-star extension of vertex values ``field`` (flattened row-major)."""
    f = np.asarray(field, dtype=float).ravel()
    if len(f) != cx.n_vertices:
        raise ValueError(f"field has {len(f)} values but complex has {cx.n_vertices} vertices")
    if not np.all(np.isfinite(f)):
        raise ValueError("field values must be finite")
    if direction not in ("sublevel", "superlevel"):
        raise ValueError(f"unknown direction {direction!r}")
    vert = -f if direction == "superlevel" else f
    values = np.empty(len(cx))
    values[: cx.n_vertices] = vert
    for d in range(1, cx.max_dimension + 1):
        values[cx.indices(d)] = vert[cx.vertex_array(d)].max(axis=1)
    return _assemble(cx, values, 0, "lower_star", direction, tie_break, seed)


def flag(cx: SimplicialComplex, edge_values, vertex_value: float = 0.0,
         tie_break: TieBreak = "deterministic", seed: int | None = None) -> Filtration:
    """Flag extension of edge values.

    ``edge_values`` is either an array aligned with ``cx.indices(1)`` or a
    mapping from vertex pairs to values.
    """
    n_e = cx.count(1)
    if isinstance(edge_values, dict):
        ev = np.empty(n_e)
        for j, s in enumerate(cx.simplices[cx.starts[1]:cx.starts[1] + n_e] if n_e else []):
            if s not in edge_values:
                raise ValueError(f"missing value for edge {s}")
            ev[j] = edge_values[s]
    else:
        ev = np.asarray(edge_values, dtype=float).ravel()
        if len(ev) != n_e:
            raise ValueError(f"got {len(ev)} edge values for {n_e} edges")
    if np.any(ev < vertex_value):
        raise ValueError("edge values must not be below the vertex value")
    values = np.empty(len(cx))
    values[: cx.n_vertices] = vertex_value
    if n_e:
        values[cx.indices(1)] = ev
    for d in range(2, cx.max_dimension + 1):
        values[cx.indices(d)] = values[cx.faces[d]].max(axis=1)
    return _assemble(cx, values, 1, "flag", "sublevel", tie_break, seed)


def from_simplex_values(cx: SimplicialComplex, values, tie_break: TieBreak = "deterministic",
                        seed: int | None = None) -> Filtration:
    """Filtration with arbitrary monotone per-simplex values.

    Each simplex controls its own value.
    """
    v = np.asarray(values, dtype=float).ravel()
    if len(v) != len(cx):
        raise ValueError("one value per simplex is required")
    check_monotone(cx, v)
    order = strict_order(cx, v, tie_break, seed)
    position = np.empty_like(order)
    position[order] = np.arange(len(order))
    return Filtration(cx, v, order, position, np.arange(len(cx)), "generic")


def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _as_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 1:
        raise ValueError(f"expected an (n, d) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


def _edge_lengths(cx: SimplicialComplex, pts: np.ndarray) -> np.ndarray:
    e = cx.vertex_array(1)
    diff = pts[e[:, 0]] - pts[e[:, 1]]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def rips_complex(points, max_dim: int, threshold: float | None = None) -> SimplicialComplex:
    """Clique complex of the ``threshold`` neighbourhood graph up to ``max_dim``."""
    pts = _as_cloud(points)
    n = len(pts)
    dist = _pairwise_distances(pts)
    if threshold is None:
        threshold = float(dist.max()) if n > 1 else 0.0
    iu, ju = np.nonzero(np.triu(dist <= threshold, k=1))
    higher = [set() for _ in range(n)]
    for u, v in zip(iu.tolist(), ju.tolist()):
        higher[u].add(v)
    simplices: list[tuple[int, ...]] = [(v,) for v in range(n)]
    layer = [((v,), higher[v]) for v in range(n)]
    for _ in range(max_dim):
        nxt = []
        for s, cand in layer:
            for w in sorted(cand):
                t = s + (w,)
                simplices.append(t)
                nxt.append((t, cand & higher[w]))
        layer = nxt
    return SimplicialComplex(simplices, close=False)


def rips_filtration(points, max_hom_dim: int = 1, threshold: float | None = None,
                    tie_break: TieBreak = "deterministic", seed: int | None = None) -> Filtration:
    """Vietoris-Rips filtration truncated at simplex dimension ``max_hom_dim + 1``.

    ``threshold`` defaults to the diameter of the point set.
    """
    if max_hom_dim < 0:
        raise ValueError("max_hom_dim must be non-negative")
    if threshold is not None and threshold <= 0:
        raise ValueError("threshold must be positive")
    pts = _as_cloud(points)
    cx = rips_complex(pts, max_hom_dim + 1, threshold)
    filt = flag(cx, _edge_lengths(cx, pts), 0.0, tie_break, seed)
    filt.meta["points"] = pts
    return filt


def weak_alpha_filtration(points, tie_break: TieBreak = "deterministic", seed: int | None = None) -> Filtration:
    """Flag filtration of edge lengths on the planar Delaunay triangulation."""
    pts = _as_cloud(points)
    cx = delaunay_2d(pts)
    filt = flag(cx, _edge_lengths(cx, pts), 0.0, tie_break, seed)
    filt.meta["points"] = pts
    return filt


N_DIRECTIONS = 8


def directional_masks(shape: tuple[int, int]) -> np.ndarray:
    """The 8 height functions ``cos(t) x + sin(t) y``, each rescaled to [0, 1].

    ``x`` is the column index and ``y`` the row index. Returns an array of
    shape ``(8, rows, cols)``; direction ``i`` has angle ``i * pi / 4``.
    """
    rows, cols = shape
    y, x = np.mgrid[0:rows, 0:cols].astype(float)
    masks = np.empty((N_DIRECTIONS, rows, cols))
    for i in range(N_DIRECTIONS):
        t = i * np.pi / 4
        c, s = np.cos(t), np.sin(t)
        # exact zeros keep axis-aligned directions free of 1e-17 noise
        c = 0.0 if abs(c) < 1e-12 else c
        s = 0.0 if abs(s) < 1e-12 else s
        g = c * x + s * y
        corners = [c * a + s * b for a in (0, cols - 1) for b in (0, rows - 1)]
        lo, hi = min(corners), max(corners)
        masks[i] = (g - lo) / (hi - lo) if hi > lo else 1.0
    return masks


def directional_filtrations(image, cx: SimplicialComplex | None = None) -> list[Filtration]:
    """Superlevel lower-star filtrations of ``image * g`` for the 8 directions."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be 2-dimensional")
    if cx is None:
        cx = build_freudenthal_grid(*img.shape)
    return [lower_star(cx, (img * g).ravel(), "superlevel") for g in directional_masks(img.shape)]
