"""The full recommender: news encoder, coverage, CMA user encoder and prediction head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .config import ModelConfig
from .coverage import CoverageState, build_coverage
from .data.sequences import MASK, PAD
from .news_encoder import NewsEncoder
from .numerics import Module, Tensor, parameter, trunc_normal
from .user_encoder import PredictionHead, UserEncoder


@dataclass
class Batch:
    """Stacked padded windows; ``slots``/``items`` are ``(B, N)`` as in :class:`PaddedSequence`."""

    slots: np.ndarray
    items: np.ndarray
    mask_rows: np.ndarray
    mask_cols: np.ndarray
    labels: np.ndarray
    offset: int = 0

    @classmethod
    def from_sequences(cls, seqs) -> "Batch":
        slots = np.stack([s.slots for s in seqs])
        items = np.stack([s.items for s in seqs])
        rows = np.concatenate([np.full(len(s.mask_positions), i) for i, s in enumerate(seqs)]).astype(np.int64)
        cols = np.concatenate([s.mask_positions for s in seqs]).astype(np.int64)
        labels = np.concatenate([s.labels for s in seqs]).astype(np.int64)
        return cls(slots, items, rows, cols, labels)

    def trimmed(self) -> "Batch":
        """Drop leading columns that are padding in every row; ``offset`` keeps positions aligned."""
        live = np.flatnonzero((self.slots != PAD).any(axis=0))
        start = int(live[0]) if live.size else 0
        if start == 0:
            return self
        return Batch(self.slots[:, start:], self.items[:, start:], self.mask_rows, self.mask_cols - start,
                     self.labels, self.offset + start)

    @property
    def valid(self) -> np.ndarray:
        return self.slots != PAD


@dataclass
class ForwardOutput:
    news: Tensor  # (num_news, d) catalog representations
    output: Tensor  # (B, N, d)
    coverage: CoverageState


class DCAN(Module):
    def __init__(self, config: ModelConfig, vocab_size: int, titles: np.ndarray, seed: int = 0):
        config.validate()
        self.config = config
        self.titles = np.asarray(titles, dtype=np.int64)
        self.num_news = len(self.titles)
        rng = np.random.default_rng(seed)
        c = config
        self.news_encoder = NewsEncoder(vocab_size, c.word_dim, c.d, c.news_heads, rng, c.news_layers, c.dropout,
                                        c.word_position_scale)
        self.mask_embedding = parameter(trunc_normal(rng, (c.d,), c.init_std))
        self.user_encoder = UserEncoder(c.d, c.n_heads, c.num_layers, c.max_len, rng, c.dropout,
                                        c.head_assignment(), c.value_injection)
        self.head = PredictionHead(c.d, self.num_news, rng)
        self._news_cache: np.ndarray | None = None
        self._cache_version = -1
        self.version = 0

    def mark_updated(self) -> None:
        """Invalidate cached catalog encodings after a parameter change."""
        self.version += 1

    def load_state_dict(self, state) -> None:
        super().load_state_dict(state)
        self.mark_updated()

    # -- catalog -------------------------------------------------------------

    def encode_catalog(self, rng=None) -> Tensor:
        return self.news_encoder.encode_catalog(self.titles, rng)

    def cached_catalog(self) -> Tensor:
        """Inference-mode catalog matrix, recomputed after every :meth:`mark_updated`."""
        version = self.version
        if self._news_cache is None or version != self._cache_version:
            was_training = self.training
            self.eval()
            with nx.no_grad():
                self._news_cache = self.encode_catalog().data
            self.train(was_training)
            self._cache_version = version
        return Tensor(self._news_cache)

    # -- sequence side -------------------------------------------------------

    def _lookup(self, news: Tensor, ids: np.ndarray, mask_row: Tensor | None) -> Tensor:
        d = news.shape[1]
        zero = Tensor(np.zeros((1, d), dtype=news.dtype))
        extra = mask_row.reshape(1, d) if mask_row is not None else zero
        table = nx.concat([news, zero, extra], axis=0)
        idx = np.where(ids == PAD, self.num_news, np.where(ids == MASK, self.num_news + 1, ids))
        return nx.take_rows(table, idx)

    def coverage_state(self, news: Tensor, batch: Batch) -> CoverageState:
        c = self.config
        items = batch.items
        if c.zero_masked_coverage and batch.mask_rows.size:
            items = items.copy()
            items[batch.mask_rows, batch.mask_cols] = MASK
        # MASK slots contribute a zero representation but still count as a click position
        reps = self._lookup(news, items, None)
        return build_coverage(reps, batch.valid, c.eta, c.freq, c.beta, c.enabled(), c.circle_odd)

    def forward(self, batch: Batch, rng: np.random.Generator | None = None,
                news: Tensor | None = None) -> ForwardOutput:
        if news is None:
            news = self.encode_catalog(rng)
        inputs = self._lookup(news, batch.slots, self.mask_embedding)
        state = self.coverage_state(news, batch)
        use_state = state if any(a != "none" for a in self.user_encoder.assignment) else None
        out = self.user_encoder(inputs, batch.valid, use_state, rng, offset=batch.offset)
        return ForwardOutput(news, out, state)

    # -- persistence ---------------------------------------------------------

    def manifest(self) -> dict[str, object]:
        from .config import format_value

        values = {f"model.{k}": format_value(v) for k, v in vars(self.config).items()}
        values["model.vocab_size"] = self.news_encoder.word_embedding.shape[0]
        values["model.num_news"] = self.num_news
        return values
