"""Penalised least squares with classical and topological penalties.

Every penalty exposes ``(value, subgradient)``. The weight-cluster penalties
view the coefficients as points on a line; their dimension-0 diagram only
depends on the gaps between consecutive sorted values, which is what the
fast path here computes. The level-set penalties use the superlevel
filtration of the coefficients on the path graph ``0 - 1 - ... - p-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..backprop import lower_star_objective
from ..diagram import LossSpec, LossTerm, _term

PENALTIES = ("ols", "l1", "l2", "tv", "tv2", "top1", "top2", "top1-ls", "top2-ls", "top-image")


def _finite_terms(births, deaths, order_key, spec: LossSpec):
    """Indices (into births/deaths) of the summands of E with essential class first."""
    life = np.abs(deaths - births)
    keep = life > 0
    idx = np.nonzero(keep)[0]
    # one essential class occupies index 1
    ranked = idx[np.lexsort((order_key[idx], -life[idx]))]
    start = max(spec.i0 - 2, 0)
    return ranked[start:]


def _sum_terms(births, deaths, chosen, spec):
    val = 0.0
    gb = np.zeros(len(births))
    gd = np.zeros(len(births))
    if spec.p == 1 and spec.q == 0:
        s = np.sign(deaths[chosen] - births[chosen])
        return float(np.abs(deaths[chosen] - births[chosen]).sum()), _scatter(gb, chosen, -s), _scatter(gd, chosen, s)
    for i in chosen.tolist():
        v, db, dd = _term(births[i], deaths[i], spec.p, spec.q)
        val += v
        gb[i] = db
        gd[i] = dd
    return val, gb, gd


def _scatter(buf, idx, vals):
    buf[idx] = vals
    return buf


def weight_cluster_loss(beta: np.ndarray, spec: LossSpec) -> tuple[float, np.ndarray]:
    """``E(spec; PD_0)`` of the coefficients viewed as points on a line.

    The distance filtration's dimension-0 pairs are ``(0, gap)`` for the
    gaps between consecutive sorted values, destroyed by the edge joining
    the two neighbours.
    """
    if spec.k != 0:
        raise ValueError("points on a line only have dimension-0 features")
    beta = np.asarray(beta, dtype=float)
    if len(beta) < 2:
        return 0.0, np.zeros_like(beta)
    order = np.argsort(beta, kind="stable")
    gaps = np.diff(beta[order])
    zeros = np.zeros_like(gaps)
    chosen = _finite_terms(zeros, gaps, np.arange(len(gaps)), spec)
    val, _, gd = _sum_terms(zeros, gaps, chosen, spec)
    grad = np.zeros_like(beta)
    np.add.at(grad, order[1:], gd)
    np.add.at(grad, order[:-1], -gd)
    return val, grad


def path_superlevel_pd0(beta: np.ndarray):
    """Superlevel dimension-0 pairs of ``beta`` on the path graph.

    Returns ``(creator_vertex, death_vertex)`` arrays for finite pairs (the
    death vertex is the lower endpoint of the merging edge) and the creator
    of the essential class. The order of vertices and edges matches the
    deterministic strict order used by :func:`toplayer.filtration.lower_star`.
    """
    beta = np.asarray(beta, dtype=float)
    p = len(beta)
    neg = -beta
    ev = np.maximum(neg[:-1], neg[1:])
    keys_val = np.concatenate([neg, ev])
    keys_dim = np.concatenate([np.zeros(p, int), np.ones(p - 1, int)])
    order = np.lexsort((np.arange(2 * p - 1), keys_dim, keys_val)).tolist()
    rank = [0] * p
    for r, s in enumerate(order):
        if s < p:
            rank[s] = r
    parent = list(range(p))
    oldest = list(range(p))
    creators, deaths = [], []

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in order:
        if s < p:
            continue
        u = s - p
        v = u + 1
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        ou, ov = oldest[ru], oldest[rv]
        if rank[ou] > rank[ov]:
            younger, elder = ou, ov
        else:
            younger, elder = ov, ou
        creators.append(younger)
        # the edge's controller is whichever endpoint enters later
        deaths.append(u if rank[u] > rank[v] else v)
        parent[ru] = rv
        oldest[rv] = elder
    return np.asarray(creators, dtype=int), np.asarray(deaths, dtype=int), oldest[find(0)], np.asarray(rank)


def level_set_loss(beta: np.ndarray, spec: LossSpec) -> tuple[float, np.ndarray]:
    """``E(spec; PD_0)`` of the superlevel filtration of ``beta`` on a path."""
    if spec.k != 0:
        raise ValueError("the path graph only has dimension-0 features")
    beta = np.asarray(beta, dtype=float)
    if len(beta) < 2:
        return 0.0, np.zeros_like(beta)
    cr, de, _, rank = path_superlevel_pd0(beta)
    births, deaths = beta[cr], beta[de]
    chosen = _finite_terms(births, deaths, rank[cr], spec)
    val, gb, gd = _sum_terms(births, deaths, chosen, spec)
    grad = np.zeros_like(beta)
    np.add.at(grad, cr, gb)
    np.add.at(grad, de, gd)
    return val, grad


TOP1 = LossSpec(1, 0, 2, 0)
TOP2 = LossSpec(1, 0, 4, 0)


def penalty(name: str, shape: tuple[int, int] | None = None) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Penalty function ``beta -> (value, subgradient)`` by name."""
    if name == "ols":
        return lambda b: (0.0, np.zeros_like(b))
    if name == "l1":
        return lambda b: (float(np.abs(b).sum()), np.sign(b))
    if name == "l2":
        def l2(b):
            nrm = float(np.linalg.norm(b))
            return nrm, (b / nrm if nrm > 0 else np.zeros_like(b))
        return l2
    if name == "tv":
        def tv(b):
            s = np.sign(np.diff(b))
            g = np.zeros_like(b)
            g[1:] += s
            g[:-1] -= s
            return float(np.abs(np.diff(b)).sum()), g
        return tv
    if name == "tv2":
        def tv2(b):
            d = np.diff(b)
            nrm = float(np.linalg.norm(d))
            g = np.zeros_like(b)
            if nrm > 0:
                g[1:] += d / nrm
                g[:-1] -= d / nrm
            return nrm, g
        return tv2
    if name == "top1":
        return lambda b: weight_cluster_loss(b, TOP1)
    if name == "top2":
        return lambda b: weight_cluster_loss(b, TOP2)
    if name == "top1-ls":
        return lambda b: level_set_loss(b, TOP1)
    if name == "top2-ls":
        return lambda b: level_set_loss(b, TOP2)
    if name == "top-image":
        if shape is None:
            raise ValueError("the image penalty needs the image shape")
        terms = [LossTerm(LossSpec(1, 0, 2, 0)), LossTerm(LossSpec(1, 0, 2, 1))]

        def top_image(b):
            v, g = lower_star_objective(b.reshape(shape), terms, direction="superlevel")
            return v, g.ravel()
        return top_image
    raise ValueError(f"unknown penalty {name!r}; choose from {', '.join(PENALTIES)}")


def min_norm_least_squares(X, y) -> np.ndarray:
    return np.linalg.lstsq(X, y, rcond=None)[0]


def fit(X, y, pen, lam: float, iterations: int = 300, beta0=None) -> np.ndarray:
    """Minimise ``mean((y - X b)^2) + lam * P(b)`` by (sub)gradient descent.

    Fixed step ``1 / L`` for the smooth part; the returned estimate is the
    average of the second half of the iterates, which damps the oscillation
    that non-smooth penalties cause at a fixed step.
    """
    n, p = X.shape
    L = 2.0 * np.linalg.norm(X, 2) ** 2 / n
    if not np.isfinite(L) or L == 0:
        raise ValueError("degenerate design matrix")
    step = 1.0 / L
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    XtX = X.T @ X * (2.0 / n)
    Xty = X.T @ y * (2.0 / n)
    avg = np.zeros(p)
    half = iterations // 2
    for t in range(iterations):
        g = XtX @ beta - Xty
        if lam:
            g = g + lam * pen(beta)[1]
        beta = beta - step * g
        if t >= half:
            avg += beta
    return avg / (iterations - half)


def log_grid(size: int = 16, lo: float = 1e-4, hi: float = 1e1) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), size)


@dataclass
class RegressionProblem:
    """Data, ground truth and tuning setup for one penalised regression."""

    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray
    penalty: str
    lambdas: np.ndarray = field(default_factory=log_grid)
    folds: int = 5
    seed: int = 0
    sigma: float = 0.05
    iterations: int = 300
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        n, p = self.X.shape
        if self.y.shape != (n,) or self.beta_star.shape != (p,):
            raise ValueError("inconsistent problem dimensions")
        if np.any(np.asarray(self.lambdas) <= 0):
            raise ValueError("lambda grid must be positive")
        if self.folds < 2 or self.folds > n:
            raise ValueError(f"need 2 <= folds <= n, got {self.folds}")


@dataclass
class RegressionResult:
    beta_hat: np.ndarray
    lam: float
    cv_errors: np.ndarray
    mse: float
    path: dict = field(default_factory=dict)


def prediction_mse(beta_hat, beta_star, sigma: float) -> float:
    """Expected squared prediction error for a fresh ``x ~ N(0, I)``."""
    return float(np.sum((beta_hat - beta_star) ** 2) + sigma ** 2)


def regularized_regression(problem: RegressionProblem, keep_path: bool = False) -> RegressionResult:
    """Select lambda by K-fold cross-validation, then refit on all data.

    Within each fold the grid is traversed from the largest lambda down,
    warm-starting each fit from the previous one.
    """
    X, y = problem.X, problem.y
    n, p = X.shape
    pen = penalty(problem.penalty, problem.image_shape)
    if problem.penalty == "ols":
        beta = min_norm_least_squares(X, y)
        return RegressionResult(beta, 0.0, np.zeros(0), prediction_mse(beta, problem.beta_star, problem.sigma))
    lams = np.sort(np.asarray(problem.lambdas, dtype=float))[::-1]
    rng = np.random.default_rng(problem.seed)
    fold_of = rng.permutation(n) % problem.folds
    errs = np.zeros((problem.folds, len(lams)))
    for f in range(problem.folds):
        tr, va = fold_of != f, fold_of == f
        beta = None
        for j, lam in enumerate(lams):
            beta = fit(X[tr], y[tr], pen, lam, problem.iterations, beta)
            errs[f, j] = np.mean((y[va] - X[va] @ beta) ** 2)
    cv = errs.mean(axis=0)
    best = int(np.argmin(cv))
    beta = None
    path = {}
    for j in range(best + 1):
        beta = fit(X, y, pen, lams[j], problem.iterations, beta)
        if keep_path:
            path[float(lams[j])] = beta.copy()
    return RegressionResult(beta, float(lams[best]), cv[::-1], prediction_mse(beta, problem.beta_star, problem.sigma), path)


def simulate(beta_kind: str, n: int, penalty_name: str, seed: int, iterations: int = 300,
             folds: int = 5, sigma: float = 0.05) -> RegressionResult:
    """One replicate: draw ``beta*`` and data from ``seed``, then fit with CV."""
    from .synth import regression_data, synth_data

    beta = synth_data(beta_kind, seed=seed)
    X, y = regression_data(beta, n, sigma, seed=seed + 10_000)
    prob = RegressionProblem(X, y, beta, penalty_name, folds=folds, seed=seed, sigma=sigma, iterations=iterations)
    return regularized_regression(prob)
