"""Title encoder: word embeddings, one transformer layer, additive-attention pooling."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import numerics as nx
from .attention import TransformerBlock
from .data.mind import PAD_ID, Vocabulary
from .numerics import Linear, Module, Tensor, parameter, trunc_normal

log = logging.getLogger(__name__)


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle)).astype(nx.default_dtype())


class AdditivePooling(Module):
    """``softmax_t(q . tanh(h_t W + b))``-weighted sum of token states."""

    def __init__(self, d: int, rng: np.random.Generator, hidden: int | None = None):
        hidden = hidden or d
        self.proj = Linear(d, hidden, rng)
        self.query = parameter(trunc_normal(rng, (hidden, 1)))

    def __call__(self, h: Tensor, mask: np.ndarray) -> Tensor:
        logits = (nx.tanh(self.proj(h)) @ self.query)[..., 0]
        weights = nx.softmax(logits, axis=-1, mask=mask)
        b, t = weights.shape
        return (weights.reshape(b, 1, t) @ h).reshape(b, h.shape[-1])


class NewsEncoder(Module):
    def __init__(self, vocab_size: int, word_dim: int, d: int, n_heads: int, rng: np.random.Generator,
                 num_layers: int = 1, dropout: float = 0.0, position_scale: float = 0.1):
        # unit-scale rows so token identity is not drowned out by the sinusoidal positions
        table = trunc_normal(rng, (vocab_size, word_dim), std=1.0)
        table[PAD_ID] = 0.0
        self.word_embedding = parameter(table)
        self.proj = Linear(word_dim, d, rng)
        self.layers = [TransformerBlock(d, n_heads, rng, dropout) for _ in range(num_layers)]
        self.pool = AdditivePooling(d, rng)
        self.word_dim = word_dim
        self.dropout = dropout
        self.position_scale = position_scale

    def embed_tokens(self, tokens: np.ndarray) -> Tensor:
        """Look up ``tokens`` (any shape); ``[PAD]`` rows come out as zeros."""
        tokens = np.asarray(tokens, dtype=np.int64)
        vocab = self.word_embedding.shape[0]
        if tokens.size and (tokens.min() < 0 or tokens.max() >= vocab):
            raise IndexError(f"token id out of range [0, {vocab})")
        emb = nx.take_rows(self.word_embedding, tokens)
        keep = (tokens != PAD_ID)[..., None].astype(emb.dtype)
        return emb * keep

    def __call__(self, titles: np.ndarray, rng: np.random.Generator | None = None) -> Tensor:
        """Encode a ``(num_titles, title_len)`` id matrix to ``(num_titles, d)``."""
        titles = np.atleast_2d(np.asarray(titles, dtype=np.int64))
        mask = titles != PAD_ID
        if not mask.any(axis=1).all():
            raise ValueError("every title needs at least one non-padding token")
        emb = self.embed_tokens(titles) + self.position_scale * sinusoidal_positions(titles.shape[1], self.word_dim)
        h = self.proj(nx.dropout(emb, self.dropout, self.training, rng))
        for layer in self.layers:
            h = layer(h, key_mask=mask, rng=rng)
        return self.pool(h, mask)

    def encode_news(self, title_tokens) -> Tensor:
        return self(np.asarray(title_tokens, dtype=np.int64)[None, :]).reshape(-1)

    def encode_catalog(self, titles: np.ndarray, rng=None, chunk: int = 1024) -> Tensor:
        if len(titles) <= chunk:
            return self(titles, rng)
        parts = [self(titles[i : i + chunk], rng) for i in range(0, len(titles), chunk)]
        return nx.concat(parts, axis=0)


def load_pretrained_embeddings(path, vocab: Vocabulary, table: np.ndarray) -> int:
    """Overwrite rows of ``table`` from a ``word v1 ... vD`` text file; returns rows found."""
    index = vocab.index
    found = 0
    width = table.shape[1]
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip().split(" ")
            if len(parts) != width + 1:
                continue
            row = index.get(parts[0])
            if row is None or row == PAD_ID:
                continue
            table[row] = np.asarray(parts[1:], dtype=table.dtype)
            found += 1
    log.info("pretrained vectors for %d / %d words", found, len(vocab))
    return found
