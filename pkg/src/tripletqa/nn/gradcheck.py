"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from .autodiff import Tensor, no_grad


def grad_check(
    loss_fn,
    params: list[Tensor],
    epsilon: float = 1e-4,
    max_coords_per_param: int = 8,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients with central finite differences.

    ``loss_fn`` must rebuild the scalar loss from the current parameter
    values on every call.  Returns the maximum relative error over the
    sampled coordinates.
    """
    rng = rng or np.random.default_rng(0)
    loss = loss_fn()
    if loss.size != 1 or not np.all(np.isfinite(loss.data)):
        raise NumericError("loss must be a finite scalar")
    for p in params:
        p.grad = None
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    for p in params:
        p.grad = None

    max_rel = 0.0
    for p, grads in zip(params, analytic):
        n = p.data.size
        if n <= max_coords_per_param:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        flat = p.data.reshape(-1)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + epsilon
            with no_grad():
                plus = loss_fn().item()
            flat[idx] = original - epsilon
            with no_grad():
                minus = loss_fn().item()
            flat[idx] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericError("non-finite loss during finite differencing")
            numeric = (plus - minus) / (2.0 * epsilon)
            ana = grads.reshape(-1)[idx]
            denom = max(abs(numeric), abs(ana), 1e-6)
            max_rel = max(max_rel, abs(numeric - ana) / denom)
    return max_rel
