"""Multi-head scaled dot-product attention with optional per-head value injection."""

from __future__ import annotations

import math

import numpy as np

from . import numerics as nx
from .numerics import FeedForward, LayerNorm, Linear, Module, Tensor


class MultiHeadAttention(Module):
    """Bidirectional self-attention over ``(batch, length, d)`` inputs.

    Each head has width ``d // n_heads``; when that does not divide ``d`` the
    concatenated heads are narrower than ``d`` and the output projection maps
    them back.
    """

    def __init__(self, d: int, n_heads: int, rng: np.random.Generator, injection: str = "pre"):
        self.d = d
        self.n_heads = n_heads
        self.head_dim = d // n_heads
        inner = self.head_dim * n_heads
        self.query = Linear(d, inner, rng)
        self.key = Linear(d, inner, rng)
        self.value = Linear(d, inner, rng)
        self.out = Linear(inner, d, rng)
        self.injection = injection
        self.last_weights: np.ndarray | None = None

    def _split(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return x.reshape(b, t, self.n_heads, self.head_dim).transpose(0, 2, 1, 3)

    def __call__(self, x: Tensor, key_mask: np.ndarray | None = None,
                 value_extra: dict[int, Tensor] | None = None) -> Tensor:
        """``key_mask`` is ``(batch, length)`` with True for attendable slots.

        ``value_extra`` maps a head index to a ``(batch, length, d)`` tensor that is
        added to that head's value input only.
        """
        b, t, _ = x.shape
        q = self._split(self.query(x))
        k = self._split(self.key(x))
        v = self._value_heads(x, value_extra or {})

        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(self.head_dim))
        mask = None if key_mask is None else key_mask[:, None, None, :]
        weights = nx.softmax(scores, axis=-1, mask=mask)
        self.last_weights = weights.data
        ctx = (weights @ v).transpose(0, 2, 1, 3).reshape(b, t, self.n_heads * self.head_dim)
        return self.out(ctx)

    def _value_heads(self, x: Tensor, extra: dict[int, Tensor]) -> Tensor:
        plain = self._split(self.value(x))
        if not extra:
            return plain
        dh = self.head_dim
        heads = []
        for h in range(self.n_heads):
            vh = plain[:, h]
            if h in extra:
                cols = slice(h * dh, (h + 1) * dh)
                if self.injection == "pre":
                    # (x + a) W_h + b_h == x W_h + b_h + a W_h
                    vh = vh + extra[h] @ self.value.weight[:, cols]
                else:
                    vh = vh + extra[h][:, :, cols]
            heads.append(vh)
        return nx.stack(heads, axis=1)


class TransformerBlock(Module):
    """Post-norm block: ``y = LN(x + drop(attn(x)))``, ``z = LN(y + drop(FFN(y)))``."""

    def __init__(self, d: int, n_heads: int, rng: np.random.Generator, dropout: float = 0.0,
                 injection: str = "pre"):
        self.attention = MultiHeadAttention(d, n_heads, rng, injection)
        self.norm1 = LayerNorm(d)
        self.ffn = FeedForward(d, rng)
        self.norm2 = LayerNorm(d)
        self.dropout = dropout

    def __call__(self, x: Tensor, key_mask=None, value_extra=None, rng=None) -> Tensor:
        a = self.attention(x, key_mask, value_extra)
        y = self.norm1(x + nx.dropout(a, self.dropout, self.training, rng))
        f = self.ffn(y)
        return self.norm2(y + nx.dropout(f, self.dropout, self.training, rng))
