"""Gradient-descent optimizers over named parameter arrays.

Both optimizers update a dict of numpy arrays in place from a dict of
gradients with the same keys.
"""

from typing import Dict

import numpy as np


class SGD:
    """Plain gradient descent: p <- p - lr * g."""

    def __init__(self, lr: float):
        if lr <= 0:
            raise ValueError(f"Invalid learning rate: {lr} (must be positive)")
        self.lr = lr

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        for name, g in grads.items():
            params[name] -= self.lr * g


class Adam:
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"Invalid learning rate: {lr} (must be positive)")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError(f"Invalid Adam betas: ({beta1}, {beta2}) (must be in [0, 1))")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}
        self._t = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        self._t += 1
        c1 = 1.0 - self.beta1 ** self._t
        c2 = 1.0 - self.beta2 ** self._t
        for name, g in grads.items():
            if name not in self._m:
                self._m[name] = np.zeros_like(g)
                self._v[name] = np.zeros_like(g)
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(name: str, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8):
    name = (name or "adam").lower()
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr, beta1, beta2, eps)
    raise ValueError(f"Invalid optimizer: '{name}' (must be 'sgd' or 'adam')")
