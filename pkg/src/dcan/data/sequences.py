"""User click sequences, fixed-length windows, masking and negative sampling."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .mind import DataError, ImpressionRecord

log = logging.getLogger(__name__)

PAD = -1
MASK = -2
NUM_NEGATIVES = 100


@dataclass
class UserSequence:
    user_id: str
    clicks: list[int]

    @property
    def has_eval(self) -> bool:
        return len(self.clicks) >= 3

    @property
    def test_item(self) -> int | None:
        return self.clicks[-1] if self.has_eval else None

    @property
    def val_item(self) -> int | None:
        return self.clicks[-2] if self.has_eval else None

    @property
    def train_clicks(self) -> list[int]:
        return self.clicks[:-2] if self.has_eval else list(self.clicks)


def build_user_sequences(records: Iterable[ImpressionRecord], news_index: dict[str, int]) -> list[UserSequence]:
    """Group impressions by user and order clicks chronologically.

    The user's browsing history (repeated on every MIND row) is taken once, from
    the longest copy, and precedes all impression clicks. Impression clicks are
    sorted by timestamp (stable for ties); the same item clicked twice at the same
    timestamp is kept once. Users appear in first-seen order.
    """
    by_user: dict[str, list[tuple[int, ImpressionRecord]]] = defaultdict(list)
    for order, rec in enumerate(records):
        by_user[rec.user_id].append((order, rec))

    out = []
    for user_id, recs in by_user.items():
        recs.sort(key=lambda x: (x[1].timestamp, x[0]))
        history = max((r.history for _, r in recs), key=len)
        clicks = [news_index[n] for n in history if n in news_index]
        seen_at: set[tuple[str, object]] = set()
        for _, r in recs:
            for nid in r.clicked:
                key = (nid, r.timestamp)
                if key in seen_at or nid not in news_index:
                    continue
                seen_at.add(key)
                clicks.append(news_index[nid])
        if clicks:
            out.append(UserSequence(user_id, clicks))
    return out


@dataclass
class PaddedSequence:
    """A length-N window.

    ``slots`` is the model input (news index, ``PAD`` or ``MASK``); ``items``
    holds the true news index of each slot (``PAD`` for padding, ``MASK`` for the
    inference slot whose item is unknown).
    """

    slots: np.ndarray
    items: np.ndarray
    mask_positions: np.ndarray
    labels: np.ndarray

    @property
    def attention_mask(self) -> np.ndarray:
        return self.slots != PAD

    @property
    def ordinals(self) -> np.ndarray:
        """1-based click ordinal per slot, 0 for padding."""
        valid = self.slots != PAD
        return np.where(valid, np.cumsum(valid), 0)


def truncate_pad(clicks: list[int], n: int, mode: str = "inference") -> PaddedSequence:
    """Left-pad or truncate to ``n`` slots.

    ``inference`` keeps the latest ``n - 1`` clicks and appends a ``MASK`` slot;
    ``train`` fills all ``n`` slots with the latest clicks.
    """
    if n < 2:
        raise ValueError(f"sequence length must be >= 2, got {n}")
    if not clicks:
        raise ValueError("cannot pad an empty click sequence")
    if mode == "inference":
        kept = list(clicks[-(n - 1):])
        body = kept + [MASK]
        mask_positions = np.array([n - 1])
    elif mode == "train":
        body = list(clicks[-n:])
        mask_positions = np.array([], dtype=np.int64)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    slots = np.array([PAD] * (n - len(body)) + body, dtype=np.int64)
    labels = np.full(len(mask_positions), -1, dtype=np.int64)
    return PaddedSequence(slots, slots.copy(), mask_positions.astype(np.int64), labels)


def sample_masks(padded: PaddedSequence, rho: float, rng: np.random.Generator) -> PaddedSequence:
    """Mask each non-padding slot with probability ``rho``; always mask at least one."""
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"mask probability must be in (0, 1], got {rho}")
    candidates = np.flatnonzero(padded.items != PAD)
    if candidates.size == 0:
        raise ValueError("cannot mask an all-padding sequence")
    hit = rng.random(candidates.size) < rho
    positions = candidates[hit]
    if positions.size == 0:
        positions = np.array([rng.choice(candidates)])
    slots = padded.slots.copy()
    slots[positions] = MASK
    return replace(padded, slots=slots, mask_positions=positions.astype(np.int64),
                   labels=padded.items[positions].astype(np.int64))


@dataclass
class NegativeSample:
    user: int
    positive: int
    negatives: np.ndarray


def sample_negatives(history: Iterable[int], click_counts: np.ndarray, rng: np.random.Generator,
                     n: int = NUM_NEGATIVES, alpha: float = 1.0, user: int = -1,
                     positive: int = -1, warn: bool = True) -> NegativeSample:
    """Draw ``n`` news the user never clicked, with probability ~ click_count**alpha.

    Sampling is without replacement. Zero-count items are only used, uniformly,
    once the positively-weighted pool is exhausted; a pool smaller than ``n``
    falls back to sampling with replacement.
    """
    counts = np.asarray(click_counts, dtype=np.float64)
    allowed = np.ones(counts.size, dtype=bool)
    allowed[list(set(history))] = False
    if positive >= 0:
        allowed[positive] = False
    pool = np.flatnonzero(allowed)
    if pool.size == 0:
        raise DataError("no candidate news left for negative sampling")

    weights = counts[pool] ** alpha
    weights[counts[pool] <= 0] = 0.0
    if pool.size < n:
        if warn:
            log.warning("only %d candidates for %d negatives; sampling with replacement", pool.size, n)
        p = weights / weights.sum() if weights.sum() > 0 else None
        return NegativeSample(user, positive, rng.choice(pool, size=n, replace=True, p=p))

    heavy = pool[weights > 0]
    if heavy.size >= n:
        w = weights[weights > 0]
        chosen = rng.choice(heavy, size=n, replace=False, p=w / w.sum())
    else:
        light = pool[weights <= 0]
        chosen = np.concatenate([rng.permutation(heavy), rng.choice(light, size=n - heavy.size, replace=False)])
    return NegativeSample(user, positive, chosen.astype(np.int64))
