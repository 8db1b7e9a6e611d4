"""Image metrics: Gaussian-windowed SSIM (value and analytic gradient),
L1, MSE, PSNR.  Windows are renormalized at image borders so edge pixels
carry no zero-padding bias."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d


@dataclass
class SsimConfig:
    sigma: float = 1.5
    radius: int = 5
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        self.c1 = (0.01 * self.dynamic_range) ** 2
        self.c2 = (0.03 * self.dynamic_range) ** 2

    def kernel(self) -> np.ndarray:
        t = np.arange(-self.radius, self.radius + 1)
        k = np.exp(-0.5 * (t / self.sigma) ** 2)
        return k / k.sum()


def _check(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def _blur(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    out = convolve1d(img, k, axis=0, mode="constant")
    return convolve1d(out, k, axis=1, mode="constant")


class _Window:
    """Border-renormalized Gaussian windowing (a linear operator and its
    adjoint); operates on (H, W) planes."""

    def __init__(self, shape, config: SsimConfig):
        self.k = config.kernel()
        self.norm = _blur(np.ones(shape), self.k)

    def apply(self, x):
        return _blur(x, self.k) / self.norm

    def adjoint(self, v):
        return _blur(v / self.norm, self.k)


def _plane_stats(x, y, win):
    mu_x = win.apply(x)
    mu_y = win.apply(y)
    sxx = win.apply(x * x) - mu_x * mu_x
    syy = win.apply(y * y) - mu_y * mu_y
    sxy = win.apply(x * y) - mu_x * mu_y
    return mu_x, mu_y, sxx, syy, sxy


def ssim_map(x, y, config: SsimConfig = None) -> np.ndarray:
    """Per-pixel SSIM, averaged over channels for multi-channel input."""
    config = config or SsimConfig()
    x, y = _check(x, y)
    if x.ndim == 2:
        x = x[..., None]
        y = y[..., None]
    win = _Window(x.shape[:2], config)
    maps = []
    for c in range(x.shape[-1]):
        mu_x, mu_y, sxx, syy, sxy = _plane_stats(x[..., c], y[..., c], win)
        num = (2 * mu_x * mu_y + config.c1) * (2 * sxy + config.c2)
        den = (mu_x**2 + mu_y**2 + config.c1) * (sxx + syy + config.c2)
        maps.append(num / den)
    return np.mean(maps, axis=0)


def ssim(x, y, config: SsimConfig = None) -> float:
    return float(ssim_map(x, y, config).mean())


def ssim_loss_grad(x, y_target, config: SsimConfig = None):
    """Loss 1 - SSIM(x, y_target) and its analytic gradient w.r.t. x."""
    config = config or SsimConfig()
    x, y = _check(x, y_target)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[..., None]
        y = y[..., None]
    win = _Window(x.shape[:2], config)
    n_pix = x.shape[0] * x.shape[1]
    n_ch = x.shape[-1]
    grad = np.zeros_like(x)
    total = 0.0
    for c in range(x.shape[-1]):
        xc = x[..., c]
        yc = y[..., c]
        mu_x, mu_y, sxx, syy, sxy = _plane_stats(xc, yc, win)
        a1 = 2 * mu_x * mu_y + config.c1
        b1 = mu_x**2 + mu_y**2 + config.c1
        a2 = 2 * sxy + config.c2
        b2 = sxx + syy + config.c2
        lum = a1 / b1
        con = a2 / b2
        total += float((lum * con).mean())
        d_mu = 2 * (mu_y * b1 - mu_x * a1) * con / b1**2
        d_sxx = -lum * a2 / b2**2
        d_sxy = 2 * lum / b2
        g = (win.adjoint(d_mu)
             + 2 * xc * win.adjoint(d_sxx)
             - 2 * win.adjoint(d_sxx * mu_x)
             + yc * win.adjoint(d_sxy)
             - win.adjoint(d_sxy * mu_y))
        grad[..., c] = g / (n_pix * n_ch)
    value = total / n_ch
    g_out = -grad[..., 0] if squeeze else -grad
    return 1.0 - value, g_out


def l1(x, y) -> float:
    x, y = _check(x, y)
    return float(np.abs(x - y).mean())


def mse(x, y) -> float:
    x, y = _check(x, y)
    return float(((x - y) ** 2).mean())


def psnr(x, y, dynamic_range: float = 1.0) -> float:
    m = mse(x, y)
    if m == 0:
        return float("inf")
    return float(10.0 * np.log10(dynamic_range**2 / m))
