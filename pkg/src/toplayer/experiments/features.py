"""Directional persistence features, a linear classifier on them, and attacks.

Each image is multiplied by 8 directional height functions; every product
gets a superlevel lower-star filtration on the Freudenthal grid, and from its
diagrams in dimensions 0 and 1 the 25 losses ``E(p, q, 1; PD_k)`` with
``p, q in 0..4`` are read off. Essential classes are capped at the end of the
filtration so every diagram contributes finite terms.

Feature order is direction-major, then homology dimension, then ``p``, then
``q``: index ``((d * 2 + k) * 5 + p) * 5 + q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.preprocessing import StandardScaler

from ..complex import build_freudenthal_grid
from ..filtration import N_DIRECTIONS, directional_masks, lower_star
from ..persistence import compute_persistence

POWERS = np.arange(5)
HOM_DIMS = (0, 1)
N_FEATURES = N_DIRECTIONS * len(HOM_DIMS) * len(POWERS) ** 2
FEATURE_I0 = 1


def feature_names() -> list[str]:
    return [f"dir{d}_k{k}_p{p}_q{q}"
            for d in range(N_DIRECTIONS) for k in HOM_DIMS for p in POWERS for q in POWERS]


def _terms(b: np.ndarray, d: np.ndarray):
    """All 25 summands and their partials for arrays of (birth, death).

    Returns ``(value, d_birth, d_death)``, each of shape ``(5, 5, m)``, with
    the same conventions as the scalar loss (``0**0 = 1``, zero slope where the
    power is not differentiable).
    """
    life = d - b
    a = np.abs(life)
    s = np.sign(life)
    m = 0.5 * (d + b)
    P = POWERS[:, None].astype(float)
    ap = a[None, :] ** P                                      # (5, m)
    mq = m[None, :] ** P                                      # (5, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        dap = np.where((P > 0) & (a[None, :] > 0), P * a[None, :] ** (P - 1) * s[None, :], 0.0)
        dmq = np.where((P > 0) & ((m[None, :] != 0) | (P >= 1)), P * m[None, :] ** (P - 1), 0.0)
    val = ap[:, None, :] * mq[None, :, :]
    dd = dap[:, None, :] * mq[None, :, :] + 0.5 * ap[:, None, :] * dmq[None, :, :]
    db = -dap[:, None, :] * mq[None, :, :] + 0.5 * ap[:, None, :] * dmq[None, :, :]
    return val, db, dd


class FeatureExtractor:
    """Features and their pixel Jacobian for images of one fixed shape."""

    def __init__(self, shape: tuple[int, int]):
        self.shape = tuple(shape)
        self.complex = build_freudenthal_grid(*self.shape)
        self.masks = directional_masks(self.shape).reshape(N_DIRECTIONS, -1)

    def __call__(self, image, jacobian: bool = False):
        img = np.asarray(image, dtype=float)
        if img.shape != self.shape:
            raise ValueError(f"expected image of shape {self.shape}, got {img.shape}")
        flat = img.ravel()
        feats = np.zeros((N_DIRECTIONS, len(HOM_DIMS), 5, 5))
        jac = np.zeros((N_DIRECTIONS, len(HOM_DIMS), 5, 5, flat.size)) if jacobian else None
        for di, g in enumerate(self.masks):
            filt = lower_star(self.complex, flat * g, "superlevel")
            dgm = compute_persistence(filt, max(HOM_DIMS))
            for ki, k in enumerate(HOM_DIMS):
                pairs = dgm.indexed(k, cap=True)
                if not pairs:
                    continue
                b = np.array([pr.birth for pr in pairs])
                d = np.array([pr.death for pr in pairs])
                val, db, dd = _terms(b, d)
                feats[di, ki] = val.sum(axis=2)
                if jacobian:
                    cv = filt.controller[[pr.creator for pr in pairs]]
                    dv = filt.controller[[pr.destroyer for pr in pairs]]
                    # d(I*g)/dI = g at the controlling vertex
                    out = jac[di, ki].reshape(25, -1)
                    for j in range(len(pairs)):
                        out[:, cv[j]] += db[:, :, j].ravel() * g[cv[j]]
                        out[:, dv[j]] += dd[:, :, j].ravel() * g[dv[j]]
        if jacobian:
            return feats.ravel(), jac.reshape(N_FEATURES, *self.shape)
        return feats.ravel()


def topo_features(image, jacobian: bool = False):
    """The 400-entry feature vector of a 2-D image (and optionally its Jacobian).

    With ``jacobian=True`` returns ``(features, J)`` where ``J`` has shape
    ``(400, rows, cols)``.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("features are defined for 2-D images")
    return FeatureExtractor(img.shape)(img, jacobian)


def feature_matrix(images, extractor: FeatureExtractor | None = None) -> np.ndarray:
    images = np.asarray(images, dtype=float)
    ext = extractor or FeatureExtractor(images.shape[1:])
    return np.stack([ext(im) for im in images])


@dataclass
class LinearClassifier:
    """Standardised features followed by multinomial logistic regression."""

    scaler: StandardScaler
    model: LogisticRegression
    extractor: FeatureExtractor

    @classmethod
    def train(cls, images, labels, C: float = 1.0, seed: int = 0,
              features: np.ndarray | None = None) -> "LinearClassifier":
        images = np.asarray(images, dtype=float)
        ext = FeatureExtractor(images.shape[1:])
        F = feature_matrix(images, ext) if features is None else features
        scaler = StandardScaler().fit(F)
        model = LogisticRegression(C=C, max_iter=5000, random_state=seed)
        model.fit(scaler.transform(F), labels)
        return cls(scaler, model, ext)

    @property
    def classes(self) -> np.ndarray:
        return self.model.classes_

    def _scale(self) -> np.ndarray:
        s = np.asarray(self.scaler.scale_, dtype=float)
        return np.where(s > 0, s, 1.0)

    def logits_from_features(self, F) -> np.ndarray:
        F = np.atleast_2d(F)
        return self.model.decision_function(self.scaler.transform(F))

    def predict_features(self, F) -> np.ndarray:
        return self.model.predict(self.scaler.transform(np.atleast_2d(F)))

    def predict(self, images) -> np.ndarray:
        return self.predict_features(feature_matrix(images, self.extractor))

    def score(self, images, labels) -> float:
        return float(np.mean(self.predict(images) == np.asarray(labels)))

    def target_loss(self, image, target) -> tuple[float, np.ndarray, int]:
        """Cross-entropy towards ``target``, its pixel gradient and the prediction."""
        f, J = self.extractor(image, jacobian=True)
        z = self.logits_from_features(f)[0]
        if z.ndim == 0 or len(self.classes) == 2:
            z = np.array([0.0, float(z)]).ravel()
        z = z - z.max()
        prob = np.exp(z) / np.exp(z).sum()
        t = int(np.nonzero(self.classes == target)[0][0])
        loss = float(-np.log(prob[t]))
        W = self.model.coef_
        if W.shape[0] == 1:
            W = np.vstack([np.zeros_like(W[0]), W[0]])
        onehot = np.zeros_like(prob)
        onehot[t] = 1.0
        g_feat = (W.T @ (prob - onehot)) / self._scale()
        grad = np.tensordot(g_feat, J, axes=(0, 0))
        return loss, grad, int(self.classes[int(np.argmax(z))])


@dataclass
class AttackResult:
    image: np.ndarray
    success: bool
    steps_taken: int
    losses: list[float] = field(default_factory=list)


def gradient_attack(clf: LinearClassifier, image, target, step_size: float = 0.02,
                    steps: int = 20) -> AttackResult:
    """Iterated signed-gradient descent on the cross-entropy of ``target``.

    Pixels are clamped to [0, 1] after each step; the run stops as soon as
    the prediction equals the target.
    """
    x = np.array(image, dtype=float)
    losses = []
    for i in range(steps + 1):
        loss, grad, pred = clf.target_loss(x, target)
        losses.append(loss)
        if pred == target:
            return AttackResult(x, True, i, losses)
        if i == steps or step_size == 0:
            break
        x = np.clip(x - step_size * np.sign(grad), 0.0, 1.0)
    return AttackResult(x, False, len(losses) - 1, losses)
