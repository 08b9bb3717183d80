"""Functionals on persistence diagrams.

``polynomial_loss`` evaluates the family

    E(p, q, i0; PD_k) = sum_{i >= i0} |d_i - b_i|^p ((d_i + b_i) / 2)^q

over the lifetime-ordered points of a diagram, together with its partial
derivatives in every birth and death. ``wasserstein`` is the p-Wasserstein
distance with matches to the diagonal allowed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .persistence import PersistenceDiagram, PersistencePair


class DomainError(ValueError):
    """The loss is undefined for the given diagram (fractional power of a negative)."""


@dataclass(frozen=True)
class LossSpec:
    """Parameters ``(p, q, i0, k)`` of the polynomial diagram loss.

    ``i0`` is 1-based: ``i0 = 2`` skips the most persistent point.
    """

    p: float
    q: float
    i0: int
    k: int

    def __post_init__(self):
        if self.i0 < 1:
            raise ValueError(f"i0 must be >= 1, got {self.i0}")
        if self.k < 0:
            raise ValueError(f"homology dimension must be >= 0, got {self.k}")
        if not (math.isfinite(self.p) and math.isfinite(self.q)) or self.p < 0 or self.q < 0:
            raise ValueError("p and q must be finite and non-negative")

    def __str__(self) -> str:
        return f"E({_fmt(self.p)},{_fmt(self.q)},{self.i0};PD{self.k})"

    @classmethod
    def parse(cls, text: str) -> "LossSpec":
        m = _SPEC_RE.fullmatch(text.strip())
        if m is None:
            raise ValueError(f"cannot parse loss spec {text!r}; expected e.g. 'E(2,0,2;PD0)'")
        return cls(float(m["p"]), float(m["q"]), int(m["i0"]), int(m["k"]))


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_SPEC_BODY = rf"E\(\s*(?P<p>{_NUM})\s*,\s*(?P<q>{_NUM})\s*,\s*(?P<i0>\d+)\s*;\s*PD_?\{{?(?P<k>\d+)\}}?\s*\)"
_SPEC_RE = re.compile(_SPEC_BODY)
_TERM_RE = re.compile(rf"\s*(?P<sign>[-+])?\s*(?:(?P<pre>{_NUM})\s*\*\s*)?(?P<spec>E\([^)]*\))(?:\s*\*\s*(?P<post>{_NUM}))?\s*")


@dataclass(frozen=True)
class LossTerm:
    """A signed, weighted loss. Objectives are minimised, so ``sign = -1``
    means the loss is increased."""

    spec: LossSpec
    sign: float = 1.0
    weight: float = 1.0

    @property
    def coefficient(self) -> float:
        return self.sign * self.weight

    def __str__(self) -> str:
        s = "-" if self.sign < 0 else "+"
        w = "" if self.weight == 1.0 else f"*{self.weight!r}"
        return f"{s}{self.spec}{w}"


def parse_objective(text: str) -> list[LossTerm]:
    """Parse e.g. ``"-E(2,1,1;PD1) + E(2,0,2;PD0)*0.5"`` into loss terms."""
    terms = []
    pos = 0
    text = text.strip()
    if not text:
        raise ValueError("empty loss expression")
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"cannot parse loss expression {text!r} at offset {pos}")
        if terms and m["sign"] is None:
            raise ValueError(f"missing '+' or '-' between terms in {text!r}")
        weight = 1.0
        if m["pre"]:
            weight *= float(m["pre"])
        if m["post"]:
            weight *= float(m["post"])
        terms.append(LossTerm(LossSpec.parse(m["spec"]), -1.0 if m["sign"] == "-" else 1.0, weight))
        pos = m.end()
    return terms


@dataclass
class DiagramGradient:
    """Partial derivatives of a loss in the birth and death of each pair."""

    pairs: list[PersistencePair] = field(default_factory=list)
    d_birth: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d_death: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def scaled(self, c: float) -> "DiagramGradient":
        return DiagramGradient(self.pairs, c * self.d_birth, c * self.d_death)


def _term(b: float, d: float, p: float, q: float) -> tuple[float, float, float]:
    """Value and (d/db, d/dd) of one summand."""
    life = d - b
    a = abs(life)
    s = float(np.sign(life))
    m = 0.5 * (d + b)
    if q > 0 and m < 0 and not float(q).is_integer():
        raise DomainError(f"midpoint {m} is negative and q={q} is not an integer")
    ap = a ** p
    mq = m ** q
    dap = p * a ** (p - 1) * s if (p > 0 and a > 0) else 0.0
    dmq = q * m ** (q - 1) if (q > 0 and (m != 0 or q >= 1)) else 0.0
    value = ap * mq
    dd = dap * mq + ap * dmq * 0.5
    db = -dap * mq + ap * dmq * 0.5
    return value, db, dd


def polynomial_loss(diagram: PersistenceDiagram, spec: LossSpec, include_zero: bool = False,
                    cap: bool = False) -> tuple[float, DiagramGradient]:
    """Evaluate the polynomial loss and its derivatives.

    Summation runs over 1-based indices ``i0 .. |I_k|`` of
    ``diagram.indexed(k)``; essential classes sit at the front of that list
    and are skipped unless ``cap`` closes them at the end of the filtration.
    """
    pts = diagram.indexed(spec.k, include_zero=include_zero, cap=cap)
    chosen = [pr for pr in pts[spec.i0 - 1:] if not pr.essential]
    db = np.zeros(len(chosen))
    dd = np.zeros(len(chosen))
    total = 0.0
    for i, pr in enumerate(chosen):
        v, gb, gd = _term(pr.birth, pr.death, spec.p, spec.q)
        total += v
        db[i] = gb
        dd[i] = gd
    return total, DiagramGradient(chosen, db, dd)


def evaluate(diagram: PersistenceDiagram, spec: LossSpec, **kw) -> float:
    return polynomial_loss(diagram, spec, **kw)[0]


# --- Wasserstein distance -------------------------------------------------


def _diag_dist(pts: np.ndarray, ground: str) -> np.ndarray:
    gap = np.abs(pts[:, 1] - pts[:, 0])
    return gap / math.sqrt(2.0) if ground == "euclidean" else gap / 2.0


def _cross_dist(a: np.ndarray, b: np.ndarray, ground: str) -> np.ndarray:
    diff = np.abs(a[:, None, :] - b[None, :, :])
    if ground == "euclidean":
        return np.sqrt((diff ** 2).sum(axis=2))
    return diff.max(axis=2)


def _check_ground(ground: str) -> None:
    if ground not in ("euclidean", "linf"):
        raise ValueError(f"unknown ground metric {ground!r}")


def _split(dgm, k):
    """Finite and essential (birth, death) rows of a diagram or array."""
    if isinstance(dgm, PersistenceDiagram):
        if k is None:
            raise ValueError("k is required when passing PersistenceDiagram objects")
        ess = [(p.birth, p.death) for p in dgm[k] if p.essential]
        return dgm.points(k), np.asarray(ess, dtype=float).reshape(-1, 2)
    pts = np.asarray(dgm, dtype=float).reshape(-1, 2)
    fin = np.isfinite(pts).all(axis=1)
    return pts[fin], pts[~fin]


def _default_cap(a, b, k) -> float:
    superlevel = any(isinstance(d, PersistenceDiagram) and d.direction == "superlevel" for d in (a, b))
    vals = [d.final_value for d in (a, b) if isinstance(d, PersistenceDiagram)]
    for d in (a, b):
        fin, ess = _split(d, k)
        arr = np.concatenate([fin.ravel(), ess[:, 0]])
        if arr.size:
            vals.append(float(arr.min() if superlevel else arr.max()))
    if not vals:
        return 0.0
    return min(vals) if superlevel else max(vals)


def wasserstein(a, b, p: float = 1.0, k: int | None = None, ground: str = "euclidean",
                essential: str = "exclude", cap: float | None = None, strict: bool = False,
                matching: bool = False):
    """p-Wasserstein distance between two diagrams of the same dimension.

    ``a`` and ``b`` are PersistenceDiagram objects (with ``k`` given) or
    ``(m, 2)`` arrays of (birth, death). Rows with an infinite coordinate are
    essential classes: they are dropped (``essential="exclude"``) or their
    death is replaced by ``cap`` (``essential="cap"``; default is the largest
    filtration value present). With ``strict``, differing numbers of essential
    classes raise ``ValueError``.

    The optimal matching is solved exactly on the square cost matrix pairing
    ``a`` plus the diagonal projections of ``b`` against ``b`` plus the
    projections of ``a``. If ``matching`` is True the matched index pairs are
    returned too, with ``-1`` standing for the diagonal.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    _check_ground(ground)
    if essential not in ("exclude", "cap"):
        raise ValueError(f"unknown essential mode {essential!r}")
    A, ea = _split(a, k)
    B, eb = _split(b, k)
    if strict and len(ea) != len(eb):
        raise ValueError(f"diagrams have {len(ea)} and {len(eb)} essential classes")
    if essential == "cap":
        if cap is None:
            cap = _default_cap(a, b, k)
        A = np.vstack([A, np.column_stack([ea[:, 0], np.full(len(ea), cap)])])
        B = np.vstack([B, np.column_stack([eb[:, 0], np.full(len(eb), cap)])])
    m, n = len(A), len(B)
    if m + n == 0:
        return (0.0, []) if matching else 0.0
    cost = np.full((m + n, n + m), np.inf)
    cost[:m, :n] = _cross_dist(A, B, ground) ** p
    cost[np.arange(m), n + np.arange(m)] = _diag_dist(A, ground) ** p
    cost[m + np.arange(n), np.arange(n)] = _diag_dist(B, ground) ** p
    cost[m:, n:] = 0.0
    rows, cols = linear_sum_assignment(cost)
    total = float(cost[rows, cols].sum())
    dist = total ** (1.0 / p)
    if not matching:
        return dist
    pairs = []
    for r, c in zip(rows.tolist(), cols.tolist()):
        if r < m and c < n:
            pairs.append((r, c))
        elif r < m:
            pairs.append((r, -1))
        elif c < n:
            pairs.append((-1, c))
    return dist, pairs


def wasserstein_brute_force(a, b, p: float = 1.0, ground: str = "euclidean") -> float:
    """Exhaustive minimum over partial matchings; finite points only.

    Exponential in the diagram size. Used as an independent check of
    :func:`wasserstein`.
    """
    _check_ground(ground)
    A = np.asarray(a, dtype=float).reshape(-1, 2)
    B = np.asarray(b, dtype=float).reshape(-1, 2)
    A = A[np.isfinite(A).all(axis=1)]
    B = B[np.isfinite(B).all(axis=1)]

    def pdist(x, y):
        d = np.abs(x - y)
        return float(np.hypot(*d)) if ground == "euclidean" else float(d.max())

    def ddist(x):
        g = abs(x[1] - x[0])
        return g / math.sqrt(2.0) if ground == "euclidean" else g / 2.0

    best = math.inf

    def rec(i, used, acc):
        nonlocal best
        if acc >= best:
            return
        if i == len(A):
            rest = sum(ddist(B[j]) ** p for j in range(len(B)) if j not in used)
            best = min(best, acc + rest)
            return
        rec(i + 1, used, acc + ddist(A[i]) ** p)
        for j in range(len(B)):
            if j not in used:
                rec(i + 1, used | {j}, acc + pdist(A[i], B[j]) ** p)

    rec(0, frozenset(), 0.0)
    return best ** (1.0 / p)
