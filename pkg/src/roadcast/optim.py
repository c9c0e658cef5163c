"""Adaptive moment estimation for the named-parameter dicts used by the models."""

from __future__ import annotations

import numpy as np


class Adam:
    """Adam with optional decoupled-from-nothing L2 weight decay added to the
    gradient, matching the common framework default."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 1e-3,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros_like(v) for name, v in params.items()}
        self._v = {name: np.zeros_like(v) for name, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for name, value in self.params.items():
            g = grads[name]
            if self.weight_decay:
                g = g + self.weight_decay * value
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / bias1
            v_hat = v / bias2
            self.params[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
