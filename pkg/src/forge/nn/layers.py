"""Minimal NCHW layer zoo with manual backprop, float32 throughout."""

from __future__ import annotations

import numpy as np


def _im2col(x, k, stride, pad):
    b, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    s0, s1, s2, s3 = x.strides
    view = np.lib.stride_tricks.as_strided(
        x, (b, c, k, k, ho, wo), (s0, s1, s2, s3, s2 * stride, s3 * stride))
    return np.ascontiguousarray(view).reshape(b, c * k * k, ho * wo), ho, wo


def _col2im(cols, x_shape, k, stride, pad):
    b, c, h, w = x_shape
    hp, wp = h + 2 * pad, w + 2 * pad
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1
    out = np.zeros((b, c, hp, wp), dtype=cols.dtype)
    cols = cols.reshape(b, c, k, k, ho, wo)
    for i in range(k):
        for j in range(k):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += \
                cols[:, :, i, j]
    if pad:
        out = out[:, :, pad:-pad, pad:-pad]
    return out


class Layer:
    def params(self):
        return []

    def buffers(self):
        return []


class Conv2D(Layer):
    def __init__(self, cin, cout, rng, k=3, stride=1, pad=None):
        self.k = k
        self.stride = stride
        self.pad = (k // 2) if pad is None else pad
        scale = np.sqrt(2.0 / (cin * k * k))
        self.w = (rng.standard_normal((cout, cin * k * k)) * scale).astype(np.float32)
        self.b = np.zeros(cout, dtype=np.float32)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def forward(self, x, train=True):
        if x.shape[1] * self.k * self.k != self.w.shape[1]:
            raise ValueError(
                f"conv expects {self.w.shape[1] // (self.k * self.k)} input "
                f"channels, got {x.shape[1]}")
        cols, ho, wo = _im2col(x, self.k, self.stride, self.pad)
        self._cache = (cols, x.shape, ho, wo)
        out = np.einsum("oc,bcp->bop", self.w, cols, optimize=True)
        return (out + self.b[None, :, None]).reshape(
            x.shape[0], -1, ho, wo).astype(np.float32)

    def backward(self, dy):
        cols, x_shape, ho, wo = self._cache
        dyf = dy.reshape(dy.shape[0], dy.shape[1], -1).astype(np.float32)
        self.dw += np.einsum("bop,bcp->oc", dyf, cols, optimize=True)
        self.db += dyf.sum(axis=(0, 2))
        dcols = np.einsum("oc,bop->bcp", self.w, dyf, optimize=True)
        return _col2im(dcols, x_shape, self.k, self.stride, self.pad)

    def params(self):
        return [("w", self.w, self.dw), ("b", self.b, self.db)]


class Dense(Layer):
    def __init__(self, nin, nout, rng):
        scale = np.sqrt(2.0 / nin)
        self.w = (rng.standard_normal((nin, nout)) * scale).astype(np.float32)
        self.b = np.zeros(nout, dtype=np.float32)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def forward(self, x, train=True):
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        dy = dy.astype(np.float32)
        self.dw += self._x.T @ dy
        self.db += dy.sum(axis=0)
        return dy @ self.w.T

    def params(self):
        return [("w", self.w, self.dw), ("b", self.b, self.db)]


class BatchNorm2D(Layer):
    def __init__(self, c, momentum=0.9, eps=1e-5):
        self.gamma = np.ones(c, dtype=np.float32)
        self.beta = np.zeros(c, dtype=np.float32)
        self.dgamma = np.zeros_like(self.gamma)
        self.dbeta = np.zeros_like(self.beta)
        self.running_mean = np.zeros(c, dtype=np.float32)
        self.running_var = np.ones(c, dtype=np.float32)
        self.momentum = momentum
        self.eps = eps

    def forward(self, x, train=True):
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.running_mean[:] = m * self.running_mean + (1 - m) * mean
            self.running_var[:] = m * self.running_var + (1 - m) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
        self._cache = (xhat, inv, train, x.shape)
        return (self.gamma[None, :, None, None] * xhat
                + self.beta[None, :, None, None]).astype(np.float32)

    def backward(self, dy):
        xhat, inv, train, shape = self._cache
        self.dgamma += (dy * xhat).sum(axis=(0, 2, 3))
        self.dbeta += dy.sum(axis=(0, 2, 3))
        g = self.gamma[None, :, None, None] * inv[None, :, None, None]
        if not train:
            return (dy * g).astype(np.float32)
        n = shape[0] * shape[2] * shape[3]
        dxhat = dy * self.gamma[None, :, None, None]
        term = (dxhat - dxhat.mean(axis=(0, 2, 3), keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=(0, 2, 3), keepdims=True))
        return (term * inv[None, :, None, None]).astype(np.float32)

    def params(self):
        return [("gamma", self.gamma, self.dgamma),
                ("beta", self.beta, self.dbeta)]

    def buffers(self):
        return [("running_mean", self.running_mean),
                ("running_var", self.running_var)]


class ReLU(Layer):
    def forward(self, x, train=True):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask


class LeakyReLU(Layer):
    def __init__(self, slope=0.1):
        self.slope = slope

    def forward(self, x, train=True):
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x).astype(np.float32)

    def backward(self, dy):
        return np.where(self._mask, dy, self.slope * dy).astype(np.float32)


class MaxPool2(Layer):
    def forward(self, x, train=True):
        b, c, h, w = x.shape
        v = x.reshape(b, c, h // 2, 2, w // 2, 2)
        out = v.max(axis=(3, 5))
        self._mask = (v == out[:, :, :, None, :, None])
        # break ties deterministically: keep only the first max per window
        flat = self._mask.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
        first = np.cumsum(flat, axis=-1) == 1
        flat &= first
        self._mask = flat.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        self._shape = x.shape
        return out

    def backward(self, dy):
        b, c, h, w = self._shape
        out = self._mask * dy[:, :, :, None, :, None]
        return out.reshape(b, c, h, w).astype(np.float32)


class UpsampleNearest2(Layer):
    def forward(self, x, train=True):
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, dy):
        b, c, h, w = dy.shape
        return dy.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5)).astype(np.float32)


def softmax_xent(logits, labels):
    """Mean cross-entropy and gradient w.r.t. logits; labels are int ids."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError("label out of range")
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    loss = float(-np.log(np.maximum(p[np.arange(n), labels], 1e-30)).mean())
    grad = p.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, (grad / n).astype(np.float32)
