"""Adaptive-moment gradient descent."""

from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, model, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.model = model
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(v) for name, v, _ in model.params()}
        self.v = {name: np.zeros_like(v) for name, v, _ in model.params()}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1 - b1**self.t
        bias2 = 1 - b2**self.t
        for name, value, grad in self.model.params():
            if not np.isfinite(grad).all():
                raise FloatingPointError(f"non-finite gradient for {name}")
            m = self.m[name]
            v = self.v[name]
            m[:] = b1 * m + (1 - b1) * grad
            v[:] = b2 * v + (1 - b2) * grad * grad
            value -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
        self.model.assert_finite()
        self.model.zero_grads()
