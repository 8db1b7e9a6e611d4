"""Three-band spherical-harmonics shading: basis, screen-space shading,
L1 gradient-descent lighting fit, and compositing."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

Y00 = 0.282095
Y1 = 0.488603
Y2A = 1.092548  # xy, yz, xz
Y20 = 0.315392  # 3z^2 - 1
Y22 = 0.546274  # x^2 - y^2


def sh_basis(normal: np.ndarray) -> np.ndarray:
    """Real orthonormal SH basis values for unit normals.

    Accepts (..., 3); returns (..., 9) ordered
    [Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22].
    """
    n = np.asarray(normal, dtype=np.float64)
    norms = np.linalg.norm(n, axis=-1)
    if not np.allclose(norms, 1.0, atol=1e-3):
        raise ValueError("sh_basis requires unit normals (|n| = 1 ± 1e-3)")
    x, y, z = n[..., 0], n[..., 1], n[..., 2]
    return np.stack([
        np.full_like(x, Y00),
        Y1 * y, Y1 * z, Y1 * x,
        Y2A * x * y, Y2A * y * z,
        Y20 * (3 * z * z - 1), Y2A * x * z,
        Y22 * (x * x - y * y),
    ], axis=-1)


@dataclass
class ShCoefficients:
    values: np.ndarray  # (channels, 9)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if self.values.shape[1] != 9 or self.values.shape[0] not in (1, 3):
            raise ValueError("expected (1|3, 9) coefficients")
        if not np.isfinite(self.values).all():
            raise ValueError("non-finite SH coefficients")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.values.tolist(), f)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls(np.array(json.load(f)))


@dataclass
class ShFitConfig:
    learning_rate: float = 0.1
    iterations: int = 3000
    batch_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.iterations < 1:
            raise ValueError("learning_rate > 0 and iterations >= 1 required")


def sh_shade(gbuffer, coeffs: ShCoefficients) -> np.ndarray:
    """Clamped SH radiance per covered pixel: max(0, c . Y(normal))."""
    cov = gbuffer.coverage
    h, w = cov.shape
    out = np.zeros((h, w, coeffs.channels), dtype=np.float32)
    if cov.any():
        basis = sh_basis(gbuffer.normal[cov])
        out[cov] = np.maximum(0.0, basis @ coeffs.values.T)
    return out


def composite(intensity, albedo, ao=None) -> np.ndarray:
    """Screen-space shading product: intensity x albedo [x ao]."""
    intensity = np.asarray(intensity)
    albedo = np.asarray(albedo)
    if intensity.shape[:2] != albedo.shape[:2]:
        raise ValueError("intensity/albedo shape mismatch")
    if intensity.ndim == 3 and albedo.ndim == 3 and \
            intensity.shape[-1] not in (1, albedo.shape[-1]):
        raise ValueError("channel mismatch")
    out = intensity * albedo
    if ao is not None:
        ao = np.asarray(ao)
        if ao.shape[:2] != out.shape[:2]:
            raise ValueError("ao shape mismatch")
        out = out * (ao[..., None] if out.ndim == 3 and ao.ndim == 2 else ao)
    return out


def _gather(gbuffers, targets, channels):
    """Stack covered-pixel (basis, albedo, target) rows per image."""
    rows = []
    for gb, tgt in zip(gbuffers, targets):
        tgt = np.asarray(tgt, dtype=np.float64)
        if tgt.ndim == 2:
            tgt = tgt[..., None]
        if tgt.shape[-1] != channels:
            if channels == 1:
                tgt = tgt.mean(axis=-1, keepdims=True)
            else:
                tgt = np.repeat(tgt, channels, axis=-1)
        cov = gb.coverage
        basis = sh_basis(gb.normal[cov])
        alb = np.asarray(gb.albedo, dtype=np.float64)[cov]
        if channels == 1:
            alb = alb.mean(axis=-1, keepdims=True)
        rows.append((basis, alb, tgt[cov]))
    return rows


def fit_sh(gbuffers, targets, config: ShFitConfig = None,
           channels: int = None, return_curve: bool = False):
    """Fit SH lighting by subgradient descent on
    mean |clamp(c . Y(n)) * albedo - target| over covered pixels."""
    config = config or ShFitConfig()
    if not gbuffers:
        raise ValueError("empty dataset")
    if channels is None:
        t0 = np.asarray(targets[0])
        channels = t0.shape[-1] if t0.ndim == 3 else 1
    rows = _gather(gbuffers, targets, channels)
    rng = np.random.default_rng(config.seed)

    # best constant-radiance start
    alb_all = np.vstack([a for _, a, _ in rows])
    tgt_all = np.vstack([t for _, _, t in rows])
    c = np.zeros((channels, 9))
    c[:, 0] = tgt_all.mean(axis=0) / np.maximum(alb_all.mean(axis=0), 1e-6) / Y00

    def loss_of(cv):
        tot = 0.0
        n = 0
        for basis, alb, tgt in rows:
            pred = np.maximum(0.0, basis @ cv.T) * alb
            tot += np.abs(pred - tgt).sum()
            n += tgt.size
        return tot / n

    best = c.copy()
    best_loss = loss_of(c)
    curve = [(0, best_loss)]
    for it in range(1, config.iterations + 1):
        pick = rng.choice(len(rows), size=min(config.batch_size, len(rows)),
                          replace=False)
        grad = np.zeros_like(c)
        n = 0
        for i in pick:
            basis, alb, tgt = rows[i]
            s = basis @ c.T  # (P, channels)
            pred = np.maximum(0.0, s) * alb
            sign = np.sign(pred - tgt) * (s > 0)
            grad += (sign * alb).T @ basis
            n += tgt.size
        c -= config.learning_rate * grad / max(n, 1)
        cur = loss_of(c)
        curve.append((it, cur))
        if cur < best_loss:
            best_loss = cur
            best = c.copy()
    coeffs = ShCoefficients(best)
    if return_curve:
        return coeffs, curve
    return coeffs


def save_curve(path, curve) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "loss"])
        w.writerows(curve)
