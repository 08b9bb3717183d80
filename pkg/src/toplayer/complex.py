"""Finite simplicial complexes and the constructors used by the filtrations.

Simplices are plain tuples of strictly increasing vertex indices. A
:class:`SimplicialComplex` stores them sorted by ``(dimension, vertices)`` so
that simplex indices are stable and vertex ``v`` always sits at index ``v``.
All chain arithmetic is over the two-element field.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

Simplex = tuple[int, ...]


class DegenerateInputError(ValueError):
    """Raised when a geometric construction receives degenerate input."""


def boundary_faces(simplex: Sequence[int]) -> list[Simplex]:
    """Codimension-1 faces of ``simplex``, deleting vertex 0, 1, ... in turn.

    Coefficients are all one over the two-element field, so the boundary is
    just this list. A vertex has empty boundary.
    """
    s = tuple(simplex)
    if len(s) <= 1:
        return []
    return [s[:i] + s[i + 1:] for i in range(len(s))]


def _check_simplex(s: Sequence[int]) -> Simplex:
    t = tuple(int(v) for v in s)
    if not t:
        raise ValueError("empty simplex")
    if t[0] < 0 or any(a >= b for a, b in zip(t, t[1:])):
        raise ValueError(f"simplex vertices must be non-negative and strictly increasing: {t}")
    return t


class SimplicialComplex:
    """An immutable, face-closed collection of simplices.

    Parameters
    ----------
    simplices : iterable of vertex tuples
        Each tuple must be strictly increasing.
    close : bool
        If True, all faces of the given simplices are added. Otherwise the
        input must already be closed and a ``ValueError`` is raised if not.

    Attributes
    ----------
    simplices : list of tuple
        Sorted by ``(dimension, vertices)``.
    dims : ndarray of int
        Dimension of each simplex.
    index : dict
        Maps a vertex tuple to its simplex index.
    faces : list of ndarray
        ``faces[d]`` has shape ``(n_d, d + 1)`` and holds the simplex indices
        of the codimension-1 faces of every ``d``-simplex, in
        :func:`boundary_faces` order. ``faces[0]`` is empty.
    """

    def __init__(self, simplices: Iterable[Sequence[int]], close: bool = True):
        given = {_check_simplex(s) for s in simplices}
        if close:
            full = set(given)
            for s in given:
                for k in range(1, len(s)):
                    full.update(combinations(s, k))
        else:
            full = given
        ordered = sorted(full, key=lambda s: (len(s), s))
        self.simplices: list[Simplex] = ordered
        self.index: dict[Simplex, int] = {s: i for i, s in enumerate(ordered)}
        self.dims = np.fromiter((len(s) - 1 for s in ordered), dtype=np.int64, count=len(ordered))
        self.max_dimension = int(self.dims.max()) if len(ordered) else -1

        counts = np.bincount(self.dims, minlength=self.max_dimension + 1) if len(ordered) else np.zeros(0, int)
        self.starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

        nv = int(counts[0]) if len(counts) else 0
        if ordered and ordered[nv - 1] != (nv - 1,):
            raise ValueError("vertex indices must be dense and 0-based")

        index = self.index
        self.faces: list[np.ndarray] = [np.zeros((nv, 0), dtype=np.int64)]
        for d in range(1, self.max_dimension + 1):
            block = ordered[self.starts[d]:self.starts[d + 1]]
            try:
                f = [[index[s[:i] + s[i + 1:]] for i in range(d + 1)] for s in block]
            except KeyError as exc:
                raise ValueError(f"complex is not closed under faces: missing {exc.args[0]}") from None
            self.faces.append(np.asarray(f, dtype=np.int64).reshape(len(block), d + 1))

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)

    def __contains__(self, s) -> bool:
        return tuple(s) in self.index

    def __repr__(self) -> str:
        counts = ", ".join(str(self.count(d)) for d in range(self.max_dimension + 1))
        return f"SimplicialComplex(counts=[{counts}])"

    @property
    def n_vertices(self) -> int:
        return self.count(0)

    def count(self, dim: int) -> int:
        if dim < 0 or dim > self.max_dimension:
            return 0
        return int(self.starts[dim + 1] - self.starts[dim])

    def indices(self, dim: int) -> np.ndarray:
        """Simplex indices of dimension ``dim``."""
        if dim < 0 or dim > self.max_dimension:
            return np.zeros(0, dtype=np.int64)
        return np.arange(self.starts[dim], self.starts[dim + 1])

    def vertex_array(self, dim: int) -> np.ndarray:
        """Vertices of all ``dim``-simplices as an ``(n_dim, dim + 1)`` array."""
        block = self.simplices[self.starts[dim]:self.starts[dim + 1]] if dim <= self.max_dimension else []
        return np.asarray(block, dtype=np.int64).reshape(len(block), dim + 1)

    def face_indices(self, i: int) -> np.ndarray:
        d = int(self.dims[i])
        return self.faces[d][i - self.starts[d]] if d > 0 else self.faces[0][:0, 0]

    def euler_characteristic(self) -> int:
        return int(sum((-1) ** d * self.count(d) for d in range(self.max_dimension + 1)))

    def subcomplex(self, keep: np.ndarray) -> "SimplicialComplex":
        """Subcomplex on the simplices selected by boolean mask ``keep``.

        Vertices are relabelled densely in increasing order.
        """
        keep = np.asarray(keep, dtype=bool)
        kept_vertices = [s[0] for s in self.simplices[: self.n_vertices] if keep[s[0]]]
        relabel = {v: i for i, v in enumerate(kept_vertices)}
        chosen = [tuple(relabel[v] for v in s) for s, k in zip(self.simplices, keep) if k]
        return SimplicialComplex(chosen, close=False)


def build_freudenthal_grid(rows: int, cols: int) -> SimplicialComplex:
    """Triangulated ``rows x cols`` pixel grid, vertices in row-major order.

    Every grid cell is split by the diagonal joining ``(i, j)`` to
    ``(i + 1, j + 1)``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid shape must be positive, got {rows}x{cols}")
    idx = np.arange(rows * cols).reshape(rows, cols)
    tris = []
    edges = []
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, :-1].ravel()
    d = idx[1:, 1:].ravel()
    # a b
    # c d   triangles (a, b, d) and (a, c, d)
    for t in zip(a, b, d):
        tris.append(tuple(sorted(map(int, t))))
    for t in zip(a, c, d):
        tris.append(tuple(sorted(map(int, t))))
    edges += zip(idx[:, :-1].ravel().tolist(), idx[:, 1:].ravel().tolist())
    edges += zip(idx[:-1, :].ravel().tolist(), idx[1:, :].ravel().tolist())
    verts = [(v,) for v in range(rows * cols)]
    return SimplicialComplex(verts + edges + tris)


def build_clique_complex(n: int, max_dim: int) -> SimplicialComplex:
    """All simplices on ``n`` vertices up to dimension ``max_dim``."""
    if n < 1:
        raise ValueError("need at least one vertex")
    if max_dim < 0 or max_dim > n - 1:
        raise ValueError(f"max_dim must lie in [0, {n - 1}], got {max_dim}")
    simplices = []
    for k in range(max_dim + 1):
        simplices.extend(combinations(range(n), k + 1))
    return SimplicialComplex(simplices, close=False)


def _collinear(points: np.ndarray) -> bool:
    rel = points - points[0]
    far = int(np.argmax(np.einsum("ij,ij->i", rel, rel)))
    if not np.any(rel[far]):
        return True
    cross = rel[far, 0] * rel[:, 1] - rel[far, 1] * rel[:, 0]
    return not np.any(cross)


def delaunay_2d(points) -> SimplicialComplex:
    """Delaunay triangulation of a planar point set as a 2-complex.

    Uses Qhull's triangulated output, which is deterministic for a given
    input, including cocircular configurations. Points Qhull drops as exact
    duplicates are attached to their nearest triangulation vertex by an edge
    so that every input point remains a vertex.
    """
    from scipy.spatial import Delaunay, QhullError

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got shape {pts.shape}")
    if len(pts) < 3:
        raise DegenerateInputError(f"Delaunay triangulation needs at least 3 points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if _collinear(pts):
        raise DegenerateInputError("all points are collinear")
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise DegenerateInputError(f"Delaunay triangulation failed: {exc}") from None
    simplices = [tuple(sorted(map(int, t))) for t in tri.simplices]
    simplices += [(v,) for v in range(len(pts))]
    for point, _, vertex in tri.coplanar:
        simplices.append(tuple(sorted((int(point), int(vertex)))))
    return SimplicialComplex(simplices)


def _rank_gf2(m: np.ndarray) -> int:
    m = m.astype(np.uint8) & 1
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        pivots = np.nonzero(m[rank:, c])[0]
        if len(pivots) == 0:
            continue
        p = rank + pivots[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        hits = np.nonzero(m[:, c])[0]
        hits = hits[hits != rank]
        m[hits] ^= m[rank]
        rank += 1
    return rank


def boundary_matrix(cx: SimplicialComplex, k: int) -> np.ndarray:
    """Dense matrix of the boundary map from k-chains to (k-1)-chains."""
    rows = cx.count(k - 1)
    cols = cx.count(k)
    mat = np.zeros((rows, cols), dtype=np.uint8)
    if k <= 0 or cols == 0:
        return mat
    base = cx.starts[k - 1]
    for j, f in enumerate(cx.faces[k]):
        mat[f - base, j] = 1
    return mat


def betti_oracle(cx: SimplicialComplex, k: int) -> int:
    """Betti number of ``cx`` in dimension ``k`` by dense GF(2) elimination.

    Intended for small complexes only.
    """
    if k < 0:
        raise ValueError("dimension must be non-negative")
    n_k = cx.count(k)
    rank_k = _rank_gf2(boundary_matrix(cx, k)) if k > 0 else 0
    rank_k1 = _rank_gf2(boundary_matrix(cx, k + 1)) if cx.count(k + 1) else 0
    return n_k - rank_k - rank_k1
