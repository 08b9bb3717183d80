"""Gradient descent on point clouds and scalar fields through diagram losses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..backprop import lower_star_objective, point_cloud_objective
from ..complex import DegenerateInputError, build_freudenthal_grid
from ..diagram import LossTerm, parse_objective


class OptimizationError(RuntimeError):
    """A step of an optimisation run failed; ``step`` says which."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass
class OptimizationConfig:
    """What to optimise and how.

    The objective ``sum(sign * weight * E)`` is minimised; a term with
    ``sign = -1`` is therefore increased.
    """

    terms: list[LossTerm]
    filtration: str = "weak-alpha"
    direction: str = "superlevel"
    threshold: float | None = None
    step_size: float = 1e-2
    steps: int = 100
    seed: int = 0
    tie_break: str = "deterministic"
    backtracking: bool = False
    snapshot_every: int = 10

    def __post_init__(self):
        if isinstance(self.terms, str):
            self.terms = parse_objective(self.terms)
        if self.step_size < 0:
            raise ValueError("step size must be non-negative")
        if self.steps < 0:
            raise ValueError("step count must be non-negative")
        if not all(np.isfinite(t.weight) for t in self.terms):
            raise ValueError("weights must be finite")
        if self.filtration not in ("lower-star", "rips", "weak-alpha"):
            raise ValueError(f"unknown filtration {self.filtration!r}")

    def to_dict(self) -> dict:
        return {
            "objective": " ".join(str(t) for t in self.terms),
            "filtration": self.filtration,
            "direction": self.direction,
            "threshold": self.threshold,
            "step_size": self.step_size,
            "steps": self.steps,
            "seed": self.seed,
            "tie_break": self.tie_break,
            "backtracking": self.backtracking,
            "snapshot_every": self.snapshot_every,
        }


@dataclass
class OptimizationResult:
    final: np.ndarray
    losses: list[float]
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)


def descend(x0: np.ndarray, fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
            cfg: OptimizationConfig) -> OptimizationResult:
    """Plain gradient descent with optional Armijo backtracking.

    ``losses[i]`` is the objective at iterate ``i``; there are ``steps + 1``.
    """
    x = np.array(x0, dtype=float)
    snaps = {0: x.copy()}
    losses = []
    for i in range(cfg.steps + 1):
        try:
            val, g = fn(x)
        except DegenerateInputError as exc:
            raise OptimizationError(i, exc) from exc
        losses.append(float(val))
        if i == cfg.steps:
            break
        if cfg.backtracking:
            t = cfg.step_size
            gg = float(np.sum(g * g))
            for _ in range(30):
                trial = x - t * g
                try:
                    tv = fn(trial)[0]
                except DegenerateInputError:
                    tv = np.inf
                if tv <= val - 1e-4 * t * gg:
                    x = trial
                    break
                t *= 0.5
        else:
            x = x - cfg.step_size * g
        if cfg.snapshot_every and (i + 1) % cfg.snapshot_every == 0:
            snaps[i + 1] = x.copy()
    snaps[cfg.steps] = x.copy()
    return OptimizationResult(x, losses, snaps)


def optimize_point_cloud(points, cfg: OptimizationConfig) -> OptimizationResult:
    """Move points by gradient descent, rebuilding the filtration every step."""
    pts = np.asarray(points, dtype=float)
    if cfg.filtration == "weak-alpha" and pts.shape[1] != 2:
        raise ValueError("weak-alpha filtrations need planar points")
    if cfg.filtration == "lower-star":
        raise ValueError("point clouds use rips or weak-alpha filtrations")
    kind = cfg.filtration if len(pts) >= 3 else "rips"

    def fn(x):
        return point_cloud_objective(x, cfg.terms, kind, cfg.threshold, cfg.tie_break, cfg.seed)

    return descend(pts, fn, cfg)


def optimize_scalar_field(field_values, cfg: OptimizationConfig) -> OptimizationResult:
    """Gradient descent on the pixel values of an image (Freudenthal grid)."""
    img = np.asarray(field_values, dtype=float)
    if img.ndim != 2:
        raise ValueError("scalar fields are optimised on a 2-D grid")
    cx = build_freudenthal_grid(*img.shape)

    def fn(x):
        return lower_star_objective(x, cfg.terms, cx, cfg.direction, cfg.tie_break, cfg.seed)

    return descend(img, fn, cfg)
