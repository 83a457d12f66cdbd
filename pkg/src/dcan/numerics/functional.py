"""Activation, normalization and regularization primitives with fused backward passes."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .tensor import Tensor, as_tensor

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(x) -> Tensor:
    """Exact GELU, ``x * Phi(x)`` with the erf form of the normal CDF."""
    x = as_tensor(x)
    xd = x.data
    cdf = 0.5 * (1.0 + erf(xd * _INV_SQRT2))
    out = (xd * cdf).astype(xd.dtype, copy=False)

    def backward(g):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * xd * xd)
        return ((g * (cdf + xd * pdf)).astype(xd.dtype, copy=False),)

    return Tensor._make(out, (x,), backward)


def softmax(x, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Numerically shifted softmax.

    ``mask`` (broadcastable, True = keep) zeroes excluded entries; a slice with
    no kept entries yields all zeros rather than NaN.
    """
    x = as_tensor(x)
    xd = x.data
    if mask is not None:
        xd = np.where(mask, xd, -np.inf)
    m = np.max(xd, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(xd - m)
    s = np.sum(e, axis=axis, keepdims=True)
    out = (e / np.where(s > 0, s, 1.0)).astype(x.dtype, copy=False)

    def backward(g):
        dot = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - dot),)

    return Tensor._make(out, (x,), backward)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    xd = x.data
    m = np.max(xd, axis=axis, keepdims=True)
    shifted = xd - m
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    out = shifted - lse

    def backward(g):
        p = np.exp(out)
        return (g - p * np.sum(g, axis=axis, keepdims=True),)

    return Tensor._make(out, (x,), backward)


def layer_norm(x, gain, bias, eps: float = 1e-12) -> Tensor:
    """Normalize over the last axis, then apply ``gain * xhat + bias``."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gd = gain.data
    out = xhat * gd + bias.data
    lead = tuple(range(xd.ndim - 1))

    def backward(g):
        gx = g * gd
        # standard layer-norm input gradient
        dx = inv * (gx - gx.mean(axis=-1, keepdims=True) - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        dgain = (g * xhat).sum(axis=lead) if lead else g * xhat
        dbias = g.sum(axis=lead) if lead else g
        return dx, dgain.reshape(gd.shape), dbias.reshape(bias.shape)

    return Tensor._make(out.astype(xd.dtype, copy=False), (x, gain, bias), backward)


def dropout(x, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when ``rate == 0`` or outside training."""
    x = as_tensor(x)
    if not training or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = 1.0 - rate
    scale = (rng.random(x.shape) < keep).astype(x.dtype) / keep
    return Tensor._make(x.data * scale, (x,), lambda g: (g * scale,))


def l2_normalize(x, axis: int = -1, eps: float = 1e-8) -> Tensor:
    """``x / (||x||_2 + eps)`` along ``axis``."""
    x = as_tensor(x)
    xd = x.data
    norm = np.sqrt(np.sum(xd * xd, axis=axis, keepdims=True))
    denom = norm + eps
    out = xd / denom

    def backward(g):
        # d/dx [x / (|x| + eps)] = g/denom - x (x.g) / (|x| denom^2)
        dot = np.sum(g * xd, axis=axis, keepdims=True)
        safe = np.where(norm > 0, norm, 1.0)
        return (g / denom - xd * dot / (safe * denom * denom),)

    return Tensor._make(out, (x,), backward)
