"""Coverage vectors over a click sequence and their four augmented views.

The raw coverage at click ``i`` is the running sum of the representations of
clicks ``1..i``. Padding slots hold zero rows and do not advance the click
ordinal. All functions accept ``(N, d)`` or ``(batch, N, d)`` inputs; ``valid``
marks non-padding slots (all slots when omitted).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .config import AUGMENTATIONS
from .numerics import Tensor

SHIFT_EPS = 1e-6


def click_ordinals(valid: np.ndarray) -> np.ndarray:
    """1-based position among valid slots along the last axis, 0 at padding."""
    valid = np.asarray(valid, dtype=bool)
    return np.where(valid, np.cumsum(valid, axis=-1), 0)


def _valid_for(x, valid):
    if valid is None:
        return np.ones(x.shape[:-1], dtype=bool)
    return np.asarray(valid, dtype=bool)


def prefix_weights(ordinals: np.ndarray, eta: float, dtype=None) -> np.ndarray:
    """``W[i, j] = eta ** (k_i - k_j)`` for valid ``j <= i``, else 0.

    ``W @ R`` is the discounted prefix sum of the valid rows of ``R``.
    """
    k = np.asarray(ordinals)
    ki, kj = k[..., :, None], k[..., None, :]
    live = (ki > 0) & (kj > 0) & (kj <= ki)
    gap = np.where(live, ki - kj, 0).astype(np.float64)
    w = np.where(live, np.power(float(eta), gap), 0.0)
    return w.astype(dtype or nx.default_dtype())


def coverage_sequence(R, valid=None) -> Tensor:
    """Running sums ``c_i = c_{i-1} + r_i`` over valid rows."""
    return decay_encode(R, 1.0, valid)


def decay_encode(R, eta: float, valid=None) -> Tensor:
    """``c_i = r_i + eta * c_{i-1}``, i.e. ``sum_j eta**(i-j) r_j`` over valid rows."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    R = nx.as_tensor(R)
    w = prefix_weights(click_ordinals(_valid_for(R, valid)), eta, R.dtype)
    return nx.Tensor(w) @ R


def _freq_scale(d: int, freq: float, dtype) -> np.ndarray:
    """``freq ** (a / d)`` for component index ``a``."""
    return np.power(float(freq), np.arange(d) / d).astype(dtype)


def circle_encode(C, freq: float, valid=None, odd: str = "cos") -> Tensor:
    """Even component ``a``: ``sin(c_a * i / freq**(a/d))``; odd: ``cos`` of the same form.

    ``odd="sin"`` uses sine on both parities. ``i`` is the click ordinal; padding
    rows are zero.
    """
    C = nx.as_tensor(C)
    valid = _valid_for(C, valid)
    d = C.shape[-1]
    k = click_ordinals(valid)[..., None].astype(C.dtype)
    arg = C * (k / _freq_scale(d, freq, C.dtype))
    even = (np.arange(d) % 2 == 0)
    if odd == "cos":
        out = nx.where(np.broadcast_to(even, C.shape), nx.sin(arg), nx.cos(arg))
    elif odd == "sin":
        out = nx.sin(arg)
    else:
        raise ValueError(f"odd must be 'cos' or 'sin', got {odd!r}")
    return out * valid[..., None].astype(C.dtype)


def nonnegative_shift(C) -> Tensor:
    """Per-row ``-min_a c_a + eps`` for rows with a negative entry, 0 elsewhere.

    Differentiable almost everywhere: the gradient flows to each row's minimum entry.
    """
    C = nx.as_tensor(C)
    data = C.data
    arg = data.argmin(axis=-1)[..., None]
    low = np.take_along_axis(data, arg, axis=-1)
    active = low < 0
    pick = np.zeros_like(data)
    np.put_along_axis(pick, arg, 1.0, axis=-1)
    pick *= active
    return -(C * pick).sum(axis=-1, keepdims=True) + (active * SHIFT_EPS).astype(data.dtype)


def log_encode(C, freq: float, valid=None) -> Tensor:
    """``log(1 + c_a / freq**(a/d))`` after shifting rows with negative entries to be positive."""
    C = nx.as_tensor(C)
    valid = _valid_for(C, valid)
    shifted = C + nonnegative_shift(C)
    out = nx.log(1.0 + shifted / _freq_scale(C.shape[-1], freq, C.dtype))
    return out * valid[..., None].astype(C.dtype)


def gamma_encode(C, beta: float, valid=None) -> Tensor:
    """``beta * c * exp(-beta * c)``; same non-negativity shift as :func:`log_encode`."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    C = nx.as_tensor(C)
    valid = _valid_for(C, valid)
    shifted = C + nonnegative_shift(C)
    out = (shifted * beta) * nx.exp(shifted * (-beta))
    return out * valid[..., None].astype(C.dtype)


def position_average(aug, valid=None) -> Tensor:
    """Divide row ``i`` by its click ordinal ``i``; padding rows stay zero."""
    aug = nx.as_tensor(aug)
    k = click_ordinals(_valid_for(aug, valid))[..., None]
    inv = np.where(k > 0, 1.0 / np.maximum(k, 1), 0.0).astype(aug.dtype)
    return aug * inv


@dataclass
class CoverageState:
    raw: Tensor
    valid: np.ndarray
    views: dict[str, Tensor] = field(default_factory=dict)
    enabled: dict[str, bool] = field(default_factory=dict)

    def averaged(self, name: str) -> Tensor:
        return position_average(self.views[name], self.valid)

    @property
    def ordinals(self) -> np.ndarray:
        return click_ordinals(self.valid)


def build_coverage(R, valid, eta: float = 0.9, freq: float = 10000.0, beta: float = 1.0,
                   enabled: dict[str, bool] | None = None, circle_odd: str = "cos",
                   all_views: bool = False) -> CoverageState:
    """Raw coverage plus the enabled views (all four with ``all_views``)."""
    enabled = dict(enabled or {a: True for a in AUGMENTATIONS})
    R = nx.as_tensor(R)
    valid = _valid_for(R, valid)
    raw = coverage_sequence(R, valid)
    state = CoverageState(raw, valid, enabled=enabled)
    wanted = [a for a in AUGMENTATIONS if all_views or enabled.get(a)]
    for name in wanted:
        if name == "decay":
            state.views[name] = decay_encode(R, eta, valid)
        elif name == "circle":
            state.views[name] = circle_encode(raw, freq, valid, circle_odd)
        elif name == "log":
            state.views[name] = log_encode(raw, freq, valid)
        elif name == "gamma":
            state.views[name] = gamma_encode(raw, beta, valid)
    return state


def coverage_sum(state: CoverageState) -> Tensor:
    """``C + sum_x phi_x * C^x`` over the un-averaged views."""
    total = state.raw
    for name in AUGMENTATIONS:
        if state.enabled.get(name):
            total = total + state.views[name]
    return total
