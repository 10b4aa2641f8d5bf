"""Adaptive-moment gradient descent over a named parameter dict."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient stops being finite."""


class Adam:
    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if not params:
            raise ValueError("optimizer needs at least one parameter")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError(f"decay rates must lie in [0, 1), got ({beta1}, {beta2})")
        if lr <= 0 or eps <= 0:
            raise ValueError(f"lr and eps must be positive, got ({lr}, {eps})")
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue  # parameter not reached by this loss; leave untouched
            if not np.isfinite(g).all():
                raise TrainingDiverged(
                    f"non-finite gradient for parameter {name!r} at step {t}"
                )
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def check_finite_loss(self, loss_value: float, context: str = ""):
        if not np.isfinite(loss_value):
            raise TrainingDiverged(
                f"non-finite loss {loss_value!r} at step {self.step_count + 1}"
                + (f" ({context})" if context else "")
            )
