import numpy as np
import pytest

from forge.metrics import SsimConfig, l1, mse, psnr, ssim, ssim_loss_grad


def test_ssim_identity_exact():
    rng = np.random.default_rng(0)
    x = rng.random((16, 16))
    assert ssim(x, x) == 1.0


def test_ssim_constant_closed_form():
    x = np.full((16, 16), 0.5)
    y = np.full((16, 16), 0.25)
    # mu products with C1=1e-4, C2=9e-4; variances zero so term2 = 1
    expect = (2 * 0.5 * 0.25 + 1e-4) / (0.5**2 + 0.25**2 + 1e-4)
    assert abs(ssim(x, y) - expect) < 1e-4


def test_ssim_symmetry_and_bounds():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.random((12, 12))
        y = rng.random((12, 12))
        a, b = ssim(x, y), ssim(y, x)
        assert abs(a - b) < 1e-12
        assert a <= 1.0
        assert a < 1.0  # distinct random images never tie the maximum


def test_ssim_shape_mismatch():
    with pytest.raises(ValueError):
        ssim(np.zeros((4, 4)), np.zeros((5, 5)))


def test_ssim_flip_invariance():
    rng = np.random.default_rng(2)
    x = rng.random((16, 16))
    y = rng.random((16, 16))
    assert np.isclose(ssim(x[:, ::-1], y[:, ::-1]), ssim(x, y), atol=1e-12)
    assert np.isclose(l1(x[:, ::-1], y[:, ::-1]), l1(x, y))
    assert np.isclose(mse(x[:, ::-1], y[:, ::-1]), mse(x, y))


def test_loss_grad_zero_at_target():
    rng = np.random.default_rng(3)
    x = rng.random((12, 12))
    loss, grad = ssim_loss_grad(x, x)
    assert abs(loss) < 1e-12
    assert np.abs(grad).max() < 1e-6


def test_loss_grad_finite_difference():
    rng = np.random.default_rng(4)
    x = rng.random((8, 8))
    y = rng.random((8, 8))
    _, grad = ssim_loss_grad(x, y)
    eps = 1e-4
    idx = [(0, 0), (3, 4), (7, 7), (2, 6), (5, 1)]
    worst = 0.0
    for i, j in idx:
        xp = x.copy(); xp[i, j] += eps
        xm = x.copy(); xm[i, j] -= eps
        fd = ((1 - ssim(xp, y)) - (1 - ssim(xm, y))) / (2 * eps)
        rel = abs(fd - grad[i, j]) / max(abs(fd), abs(grad[i, j]), 1e-8)
        worst = max(worst, rel)
    assert worst < 1e-3


def test_noise_increases_loss():
    rng = np.random.default_rng(5)
    y = rng.random((16, 16))
    base, _ = ssim_loss_grad(y, y)
    for t in range(50):
        noisy = y + np.random.default_rng(100 + t).normal(0, 0.1, y.shape)
        loss, _ = ssim_loss_grad(noisy, y)
        assert loss > base


def test_simple_metrics():
    x = np.zeros((8, 8))
    y = np.ones((8, 8))
    assert l1(x, x) == 0 and mse(x, x) == 0
    assert l1(x, y) == 1 and mse(x, y) == 1
    assert psnr(x, y, 1.0) == 0.0
    rng = np.random.default_rng(6)
    for _ in range(20):
        a, b = rng.random((6, 6)), rng.random((6, 6))
        assert mse(a, b) >= l1(a, b) ** 2 - 1e-12  # Jensen on [0,1] images
    with pytest.raises(ValueError):
        l1(x, np.zeros((4, 4)))


def test_config_validation():
    cfg = SsimConfig()
    assert cfg.c1 > 0 and cfg.c2 > 0 and cfg.radius >= 1
    assert np.isclose(cfg.c1, 1e-4) and np.isclose(cfg.c2, 9e-4)
    k = cfg.kernel()
    assert np.isclose(k.sum(), 1.0)
    assert len(k) == 2 * cfg.radius + 1
