"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def grad_check(fn, params, epsilon: float = 1e-5) -> float:
    """Max relative disagreement between reverse-mode and central differences.

    fn() must rebuild and return the scalar loss Tensor from `params` (leaf
    tensors with requires_grad=True, as a list or a name->Tensor dict) on
    every call; their .data is perturbed in place for the finite-difference
    evaluations and restored afterwards.

    Relative error per coordinate: |g_ad - g_fd| / max(floor, |g_ad| + |g_fd|).
    The floor absorbs pure roundoff: rounding the loss to one ulp perturbs the
    central difference by about eps_machine * |f| / epsilon, so coordinates
    whose true gradient is 0 read back noise of that size, not 0. Scaling the
    floor by |f| keeps that noise three decades under the 1e-4 verdict line
    without desensitizing coordinates that carry real gradient.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if isinstance(params, dict):
        params = list(params.values())

    for p in params:
        p.grad = None
    loss = fn()
    if loss.data.size != 1:
        raise ValueError("grad_check needs a scalar-valued function")
    loss.backward()
    analytic = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params
    ]
    f_scale = abs(float(loss.data))

    worst = 0.0
    for p, g_ad in zip(params, analytic):
        flat = p.data.reshape(-1)
        g_flat = g_ad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = float(fn().data)
            flat[i] = orig - epsilon
            f_minus = float(fn().data)
            flat[i] = orig
            f_scale = max(f_scale, abs(f_plus), abs(f_minus))
            g_fd = (f_plus - f_minus) / (2.0 * epsilon)
            floor = max(1e-8, 3e-6 * f_scale)
            rel = abs(g_flat[i] - g_fd) / max(floor, abs(g_flat[i]) + abs(g_fd))
            if rel > worst:
                worst = rel
    return worst
