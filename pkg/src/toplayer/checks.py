"""Randomised oracle checks shared by ``selftest`` and the test-suite.

Each ``check_*`` function returns a :class:`CheckResult`; none of them raise
on a mismatch, so callers decide how to report failures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .backprop import finite_difference_check, lower_star_objective, point_cloud_objective
from .complex import SimplicialComplex, betti_oracle, build_freudenthal_grid
from .diagram import LossSpec, LossTerm, wasserstein, wasserstein_brute_force
from .filtration import Filtration, from_simplex_values
from .persistence import compute_persistence, pd0_union_find, reduce


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    failures: list = field(default_factory=list)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_complex(rng: np.random.Generator, max_simplices: int = 30, max_dim: int = 2) -> SimplicialComplex:
    """A random closed complex on a handful of vertices with at most ``max_simplices`` simplices."""
    while True:
        nv = int(rng.integers(2, 7))
        tops = []
        for d in range(1, max_dim + 1):
            cand = list(combinations(range(nv), d + 1))
            keep = rng.random(len(cand)) < rng.uniform(0.2, 0.8)
            tops += [c for c, k in zip(cand, keep) if k]
        cx = SimplicialComplex([(v,) for v in range(nv)] + tops)
        if len(cx) <= max_simplices:
            return cx


def random_filtration(rng: np.random.Generator, cx: SimplicialComplex, ties: bool = True) -> Filtration:
    """Random monotone simplex values; small integers when ``ties`` to force repeats."""
    raw = rng.integers(0, 4, len(cx)).astype(float) if ties else rng.random(len(cx))
    vals = raw.copy()
    for d in range(1, cx.max_dimension + 1):
        idx = cx.indices(d)
        if len(idx):
            vals[idx] = np.maximum(raw[idx], vals[cx.faces[d]].max(axis=1))
    tie_break = "random" if rng.random() < 0.5 else "deterministic"
    return from_simplex_values(cx, vals, tie_break, int(rng.integers(1 << 30)))


def _sublevel_complex(filt: Filtration, alpha: float) -> SimplicialComplex | None:
    cx = filt.complex
    kept = [cx.simplices[i] for i in np.nonzero(filt.values <= alpha)[0]]
    if not kept:
        return None
    verts = sorted({v for s in kept for v in s})
    relabel = {v: i for i, v in enumerate(verts)}
    return SimplicialComplex([tuple(relabel[v] for v in s) for s in kept], close=False)


def check_betti(n: int = 200, seed: int = 0) -> tuple[CheckResult, CheckResult]:
    """Betti numbers at every value match the pairs alive there, and the
    pairs partition the simplices."""
    rng = np.random.default_rng(seed)
    bad_betti, bad_part = [], []
    for trial in range(n):
        cx = random_complex(rng)
        filt = random_filtration(rng, cx)
        dgm = reduce(filt)
        for alpha in np.unique(filt.values):
            sub = _sublevel_complex(filt, alpha)
            for k in range(cx.max_dimension + 1):
                want = betti_oracle(sub, k) if sub is not None else 0
                got = dgm.betti_at(k, alpha)
                if want != got:
                    bad_betti.append((trial, float(alpha), k, want, got))
        seen = np.zeros(len(cx), dtype=int)
        for k in range(cx.max_dimension + 1):
            for p in dgm.indexed(k, include_zero=True):
                seen[p.creator] += 1
                if p.destroyer is not None:
                    seen[p.destroyer] += 1
        if np.any(seen != 1):
            bad_part.append(trial)
    return (CheckResult("betti", not bad_betti, f"{n} filtrations, {len(bad_betti)} mismatches", bad_betti),
            CheckResult("partition", not bad_part, f"{n} filtrations, {len(bad_part)} bad", bad_part))


def _pair_set(dgm, k):
    return sorted((p.creator, p.destroyer if p.destroyer is not None else -1, p.birth, p.death)
                  for p in dgm.indexed(k, include_zero=True))


def check_union_find(n: int = 200, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad = []
    for trial in range(n):
        cx = random_complex(rng)
        filt = random_filtration(rng, cx)
        if _pair_set(pd0_union_find(filt), 0) != _pair_set(reduce(filt), 0):
            bad.append(trial)
        if _pair_set(compute_persistence(filt, cx.max_dimension), 1) != _pair_set(reduce(filt), 1):
            bad.append(trial)
    return CheckResult("union-find", not bad, f"{n} filtrations, {len(bad)} mismatches", bad)


def check_gradients(seed: int = 2, image: int = 12, points: int = 15, tol: float = 1e-5,
                    samples: int = 8, richardson: bool = True) -> CheckResult:
    """End-to-end gradients against central differences for ``p, q in 0..2``, ``k in 0, 1``."""
    rng = np.random.default_rng(seed)
    img = rng.random((image, image))
    cx = build_freudenthal_grid(image, image)
    pts = rng.random((points, 2))
    worst = 0.0
    bad = []
    checked = unstable = 0
    for k in (0, 1):
        for p in range(3):
            for q in range(3):
                terms = [LossTerm(LossSpec(p, q, 1, k))]
                cases = [
                    ("lower-star", lambda x: lower_star_objective(x, terms, cx), img),
                    ("rips", lambda x: point_cloud_objective(x, terms, "rips"), pts),
                ]
                for name, fn, x0 in cases:
                    r = finite_difference_check(fn, x0, samples=samples, seed=int(rng.integers(1 << 30)),
                                                richardson=richardson)
                    checked += r.checked
                    unstable += len(r.unstable)
                    worst = max(worst, r.max_rel_error)
                    if r.max_rel_error > tol:
                        bad.append((name, p, q, k, r.max_rel_error))
    return CheckResult("gradients", not bad,
                       f"max rel error {worst:.2e} over {checked} coordinates ({unstable} at ties skipped)", bad)


def random_diagram(rng: np.random.Generator, max_points: int = 4) -> np.ndarray:
    m = int(rng.integers(0, max_points + 1))
    b = rng.random(m)
    return np.column_stack([b, b + rng.random(m)])


def check_wasserstein(n: int = 100, seed: int = 3, tol: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad = []
    for trial in range(n):
        a, b, c = (random_diagram(rng) for _ in range(3))
        p = float(rng.choice([1.0, 2.0]))
        ground = "euclidean" if trial % 2 == 0 else "linf"
        ab = wasserstein(a, b, p, ground=ground)
        if abs(ab - wasserstein_brute_force(a, b, p, ground)) > tol:
            bad.append((trial, "brute force"))
        if abs(ab - wasserstein(b, a, p, ground=ground)) > tol:
            bad.append((trial, "symmetry"))
        if wasserstein(a, c, p, ground=ground) > ab + wasserstein(b, c, p, ground=ground) + tol:
            bad.append((trial, "triangle"))
    return CheckResult("wasserstein", not bad, f"{n} diagram triples, {len(bad)} violations", bad)


def run_all(seed: int = 0, quick: bool = False) -> list[CheckResult]:
    n = 50 if quick else 200
    betti, part = check_betti(n, seed)
    return [betti, part, check_union_find(n, seed + 1), check_gradients(seed + 2, samples=4 if quick else 8),
            check_wasserstein(n // 2, seed + 3)]
