"""Gradient routing from diagram points back to filtration parameters.

A cotangent on a birth lands on the creator simplex of that pair and a
cotangent on a death on its destroyer. From simplices it moves to the vertex
(lower-star) or edge (flag) controlling the simplex value, and from edges to
point coordinates through the derivative of the Euclidean distance. The
pairing is treated as locally constant, so at ties the result is one
element of the subgradient selected by the strict order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .complex import build_freudenthal_grid
from .diagram import DiagramGradient, LossTerm, polynomial_loss
from .filtration import Filtration, lower_star, rips_filtration, weak_alpha_filtration
from .persistence import PersistenceDiagram, compute_persistence


class DegenerateGradientWarning(RuntimeWarning):
    """A controlling edge has zero length, so its direction is undefined."""


def diagram_to_simplex_grad(diagram: PersistenceDiagram, grad: DiagramGradient) -> np.ndarray:
    """Scatter birth/death cotangents onto creator/destroyer simplices."""
    out = np.zeros(diagram.n_simplices)
    for pr, gb, gd in zip(grad.pairs, grad.d_birth, grad.d_death):
        out[pr.creator] += gb
        if pr.destroyer is None:
            if gd != 0.0:
                raise ValueError(f"nonzero death gradient on essential class created by simplex {pr.creator}")
            continue
        out[pr.destroyer] += gd
    return out


def simplex_to_vertex_grad(filt: Filtration, simplex_grad: np.ndarray) -> np.ndarray:
    """Gradient with respect to the vertex values of a lower-star filtration.

    Simplex values are reported in the original (not negated) coordinates, and
    each reported value equals the original value of its controlling vertex,
    so the cotangent moves over unchanged for both directions.
    """
    if filt.kind != "lower_star":
        raise ValueError("vertex gradients need a lower-star filtration")
    out = np.zeros(filt.complex.n_vertices)
    np.add.at(out, filt.controller, simplex_grad)
    return out


def simplex_to_point_grad(filt: Filtration, points, simplex_grad: np.ndarray) -> np.ndarray:
    """Gradient with respect to point coordinates of a distance flag filtration."""
    if filt.kind != "flag":
        raise ValueError("point gradients need a flag filtration")
    pts = np.asarray(points, dtype=float)
    if len(pts) != filt.complex.n_vertices:
        raise ValueError("point cloud does not match the filtration")
    ctrl = filt.controller
    live = (ctrl >= 0) & (simplex_grad != 0)
    edge_grad = np.zeros(len(filt))
    np.add.at(edge_grad, ctrl[live], simplex_grad[live])
    cx = filt.complex
    edges = cx.indices(1)
    g = edge_grad[edges]
    out = np.zeros_like(pts)
    if not len(edges):
        return out
    uv = cx.vertex_array(1)
    diff = pts[uv[:, 0]] - pts[uv[:, 1]]
    length = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    bad = (length == 0) & (g != 0)
    if np.any(bad):
        warnings.warn(f"{int(bad.sum())} controlling edge(s) have zero length; "
                      "their gradient is set to zero", DegenerateGradientWarning, stacklevel=2)
    scale = np.divide(g, length, out=np.zeros_like(g), where=length > 0)
    contrib = diff * scale[:, None]
    np.add.at(out, uv[:, 0], contrib)
    np.add.at(out, uv[:, 1], -contrib)
    return out


def max_homology_dim(terms: Sequence[LossTerm]) -> int:
    return max((t.spec.k for t in terms), default=0)


def objective(diagram: PersistenceDiagram, terms: Sequence[LossTerm], include_zero: bool = False,
              cap: bool = False) -> tuple[float, np.ndarray]:
    """Signed weighted sum of losses and its gradient per simplex."""
    total = 0.0
    grad = np.zeros(diagram.n_simplices)
    for t in terms:
        v, g = polynomial_loss(diagram, t.spec, include_zero=include_zero, cap=cap)
        total += t.coefficient * v
        grad += t.coefficient * diagram_to_simplex_grad(diagram, g)
    return total, grad


def lower_star_objective(values, terms: Sequence[LossTerm], cx=None, direction: str = "sublevel",
                         tie_break: str = "deterministic", seed: int | None = None,
                         include_zero: bool = False) -> tuple[float, np.ndarray]:
    """Objective of a scalar field and its gradient, in the field's shape.

    A 2-D ``values`` array is placed on the Freudenthal grid unless a complex
    is supplied.
    """
    arr = np.asarray(values, dtype=float)
    if cx is None:
        if arr.ndim != 2:
            raise ValueError("pass a complex for non-image fields")
        cx = build_freudenthal_grid(*arr.shape)
    filt = lower_star(cx, arr.ravel(), direction, tie_break, seed)
    dgm = compute_persistence(filt, max_homology_dim(terms))
    val, sg = objective(dgm, terms, include_zero=include_zero)
    return val, simplex_to_vertex_grad(filt, sg).reshape(arr.shape)


def point_cloud_objective(points, terms: Sequence[LossTerm], kind: str = "weak-alpha",
                          threshold: float | None = None, tie_break: str = "deterministic",
                          seed: int | None = None, include_zero: bool = False) -> tuple[float, np.ndarray]:
    """Objective of a point cloud under a Rips or weak-alpha filtration."""
    pts = np.asarray(points, dtype=float)
    kdim = max_homology_dim(terms)
    if len(pts) < 2:
        return 0.0, np.zeros_like(pts)
    if kind == "weak-alpha":
        filt = weak_alpha_filtration(pts, tie_break, seed)
    elif kind == "rips":
        filt = rips_filtration(pts, kdim, threshold, tie_break, seed)
    else:
        raise ValueError(f"unknown filtration kind {kind!r}")
    dgm = compute_persistence(filt, kdim)
    val, sg = objective(dgm, terms, include_zero=include_zero)
    return val, simplex_to_point_grad(filt, pts, sg)


@dataclass
class FDResult:
    """Outcome of a finite-difference comparison.

    ``unstable`` lists the flat parameter indices where the difference
    quotients at ``h`` and ``h/2`` behave like a kink rather than a smooth
    function, i.e. a step crossed a change in the pairing or a tie; they are
    excluded from ``max_rel_error``.
    """

    max_rel_error: float
    checked: int
    unstable: list[int] = field(default_factory=list)
    worst_index: int = -1


def finite_difference_check(fn: Callable[[np.ndarray], tuple[float, np.ndarray]], params,
                            h: float = 1e-4, samples: int = 20, seed: int = 0,
                            indices=None, floor: float = 1e-8, richardson: bool = False) -> FDResult:
    """Compare the analytic gradient of ``fn`` with central differences.

    ``fn`` maps a parameter array to ``(value, gradient)``. ``samples``
    random flat coordinates are checked unless ``indices`` is given. The
    relative error is ``|fd - an| / max(|fd|, |an|)``; coordinates where both
    are below ``floor`` count as exact.

    With ``richardson`` the central differences at ``h`` and ``h/2`` are
    combined as ``(4 fd(h/2) - fd(h)) / 3``, cancelling the ``O(h^2)``
    truncation term that otherwise dominates near short edges.
    """
    x0 = np.array(params, dtype=float)
    _, grad = fn(x0)
    grad = np.asarray(grad, dtype=float).ravel()
    flat = x0.ravel()
    if indices is None:
        rng = np.random.default_rng(seed)
        indices = rng.choice(flat.size, size=min(samples, flat.size), replace=False)
    worst, worst_i = 0.0, -1
    unstable = []

    def at(i, step):
        x = flat.copy()
        x[i] += step
        return fn(x.reshape(x0.shape))[0]

    f0 = fn(x0)[0]
    for i in map(int, indices):
        up, dn = at(i, h), at(i, -h)
        up2, dn2 = at(i, h / 2), at(i, -h / 2)
        fd = (up - dn) / (2 * h)
        fd_half = (up2 - dn2) / h
        # forward minus backward slope is O(h) for smooth fn but O(1) at a kink
        gap = (up + dn - 2 * f0) / h
        gap_half = (up2 + dn2 - 2 * f0) / (h / 2)
        scale = max(abs(fd), abs(grad[i]), 1.0)
        if abs(fd - fd_half) > 1e-6 * scale or abs(gap - 2 * gap_half) > 1e-6 * scale:
            unstable.append(i)
            continue
        if richardson:
            fd = (4 * fd_half - fd) / 3
        big = max(abs(fd), abs(grad[i]))
        rel = 0.0 if big < floor else abs(fd - grad[i]) / big
        if rel > worst:
            worst, worst_i = rel, i
    return FDResult(worst, len(indices) - len(unstable), unstable, worst_i)
