"""Reproducible synthetic data: coefficient vectors, regression designs and images."""

from __future__ import annotations

import numpy as np

DEFAULT_FEATURES = 100
DEFAULT_NOISE = 0.05


def three_values(p: int = DEFAULT_FEATURES, values=(1.0, 2.0, 3.0), seed: int = 0) -> np.ndarray:
    """Coefficients drawn i.i.d. uniformly from ``values``."""
    rng = np.random.default_rng(seed)
    return rng.choice(np.asarray(values, dtype=float), size=p)


def sawtooth(p: int = DEFAULT_FEATURES, teeth: int = 3, height: float = 1.0) -> np.ndarray:
    """``teeth`` linear ramps from 0 up to ``height``, each followed by a drop."""
    idx = np.arange(p)
    width = p / teeth
    phase = (idx % width) / width
    return height * (phase + 1.0 / width)


def boxcar(p: int = DEFAULT_FEATURES, boxes: int = 3, height: float = 1.0, baseline: float = 0.0) -> np.ndarray:
    """``boxes`` plateaus of ``height`` separated by stretches of ``baseline``."""
    beta = np.full(p, baseline, dtype=float)
    width = p / boxes
    for b in range(boxes):
        lo = int(round(b * width + width / 4))
        hi = int(round(b * width + 3 * width / 4))
        beta[lo:hi] = baseline + height
    return beta


def regression_data(beta: np.ndarray, n: int, sigma: float = DEFAULT_NOISE, seed: int = 0):
    """``X ~ N(0, I)`` rows and ``y = X beta + eps`` with ``eps ~ N(0, sigma^2)``."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, len(beta)))
    y = X @ beta + sigma * rng.standard_normal(n)
    return X, y


def _grid(size: int):
    y, x = np.mgrid[0:size, 0:size].astype(float)
    return y, x


def bump_image(size: int = 28, amplitude: float = 1.0, noise: float = 0.1, width: float | None = None,
               seed: int = 0) -> np.ndarray:
    """Centred Gaussian bump plus i.i.d. Gaussian pixel noise."""
    rng = np.random.default_rng(seed)
    y, x = _grid(size)
    c = (size - 1) / 2
    w = size / 6 if width is None else width
    img = amplitude * np.exp(-((x - c) ** 2 + (y - c) ** 2) / (2 * w ** 2))
    return img + noise * rng.standard_normal((size, size))


def annulus_image(size: int = 16, radius: float | None = None, thickness: float | None = None,
                  center=None) -> np.ndarray:
    """Ring of ones on a zero background with a soft edge."""
    y, x = _grid(size)
    cy, cx = ((size - 1) / 2, (size - 1) / 2) if center is None else center
    r = 0.3 * size if radius is None else radius
    t = 0.12 * size if thickness is None else thickness
    dist = np.hypot(x - cx, y - cy)
    return np.clip(1.0 - np.maximum(np.abs(dist - r) - t / 2, 0.0), 0.0, 1.0)


def disk_image(size: int, center, radius: float) -> np.ndarray:
    y, x = _grid(size)
    dist = np.hypot(x - center[1], y - center[0])
    return np.clip(radius + 0.5 - dist, 0.0, 1.0)


def noisy_circle_problem(size: int = 16, ratio: float = 0.5, sigma: float = DEFAULT_NOISE, seed: int = 0):
    """Linear regression whose coefficient vector is an annulus image.

    Returns ``(X, y, beta_star)`` with ``n = ratio * size**2`` observations.
    """
    beta = annulus_image(size).ravel()
    n = int(round(ratio * beta.size))
    X, y = regression_data(beta, n, sigma, seed)
    return X, y, beta


SHAPES = ("disk", "annulus", "two-disks")


def shape_image(kind: str, size: int = 16, rng=None, noise: float = 0.05) -> np.ndarray:
    """One randomly placed shape of the given class, values clipped to [0, 1]."""
    rng = np.random.default_rng(rng)
    if kind == "disk":
        r = rng.uniform(0.18, 0.28) * size
        c = rng.uniform(r + 1, size - 2 - r, size=2)
        img = disk_image(size, c, r)
    elif kind == "annulus":
        r = rng.uniform(0.22, 0.3) * size
        c = rng.uniform(r + 1.5, size - 2.5 - r, size=2)
        img = annulus_image(size, radius=r, thickness=rng.uniform(1.5, 2.5), center=c)
    elif kind == "two-disks":
        r = rng.uniform(0.1, 0.16) * size
        while True:
            c1 = rng.uniform(r + 1, size - 2 - r, size=2)
            c2 = rng.uniform(r + 1, size - 2 - r, size=2)
            if np.hypot(*(c1 - c2)) > 2 * r + 3:
                break
        img = np.maximum(disk_image(size, c1, r), disk_image(size, c2, r))
    else:
        raise ValueError(f"unknown shape {kind!r}")
    img = img + noise * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0)


def shape_dataset(n_per_class: int, size: int = 16, seed: int = 0, noise: float = 0.05):
    """Balanced images of :data:`SHAPES` with integer labels, shuffled."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for label, kind in enumerate(SHAPES):
        for _ in range(n_per_class):
            images.append(shape_image(kind, size, rng, noise))
            labels.append(label)
    perm = rng.permutation(len(labels))
    return np.stack(images)[perm], np.asarray(labels)[perm]


def synth_data(kind: str, seed: int = 0, **params):
    """Dispatch to the generators above by name.

    ``three-values``, ``sawtooth`` and ``boxcar`` return a coefficient vector;
    ``noisy-circle-image`` returns ``(X, y, beta)``; ``bump-image`` an image.
    """
    if kind == "three-values":
        return three_values(seed=seed, **params)
    if kind == "sawtooth":
        return sawtooth(**params)
    if kind == "boxcar":
        return boxcar(**params)
    if kind == "noisy-circle-image":
        return noisy_circle_problem(seed=seed, **params)
    if kind == "bump-image":
        return bump_image(seed=seed, **params)
    raise ValueError(f"unknown synthetic data kind {kind!r}")
