"""Central finite-difference gradient verification."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_grad(fn: Callable[[], Tensor], param: Tensor, h: float = 1e-3,
                   indices: Sequence[tuple] | None = None) -> np.ndarray:
    """Central differences of the scalar ``fn()`` w.r.t. ``param`` entries.

    Only ``indices`` are perturbed when given; other entries of the result stay 0.
    """
    grad = np.zeros_like(param.data)
    targets = indices if indices is not None else list(np.ndindex(*param.shape))
    for idx in targets:
        orig = param.data[idx].copy()
        param.data[idx] = orig + h
        up = fn().item()
        param.data[idx] = orig - h
        down = fn().item()
        param.data[idx] = orig
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """``||a - n|| / max(||a||, ||n||, floor)`` over the compared entries."""
    num = np.linalg.norm(analytic - numeric)
    den = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(num / den)


def check_gradients(fn: Callable[[], Tensor], params: dict[str, Tensor], h: float = 1e-3,
                    max_entries: int | None = None, rng: np.random.Generator | None = None) -> dict[str, float]:
    """Relative error between backprop and finite differences for each named parameter.

    With ``max_entries`` set, each parameter is spot-checked on a random subset.
    """
    for p in params.values():
        p.grad = None
    fn().backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}
    rng = rng or np.random.default_rng(0)
    errors = {}
    for name, p in params.items():
        all_idx = list(np.ndindex(*p.shape))
        if max_entries is not None and len(all_idx) > max_entries:
            pick = rng.choice(len(all_idx), size=max_entries, replace=False)
            chosen = [all_idx[i] for i in sorted(pick)]
        else:
            chosen = all_idx
        numeric = numerical_grad(fn, p, h, chosen)
        sel = tuple(np.array(chosen).T)
        errors[name] = relative_error(analytic[name][sel], numeric[sel])
    return errors
