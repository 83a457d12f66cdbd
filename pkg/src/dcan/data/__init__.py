"""Data ingestion, sequence construction and sampling."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mind import (
    PAD_ID,
    UNK_ID,
    BehaviorLog,
    DataError,
    ImpressionRecord,
    NewsArticle,
    NewsCatalog,
    Vocabulary,
    parse_behaviors_tsv,
    parse_news_tsv,
    tokenize,
)
from .sequences import (
    MASK,
    NUM_NEGATIVES,
    PAD,
    NegativeSample,
    PaddedSequence,
    UserSequence,
    build_user_sequences,
    sample_masks,
    sample_negatives,
    truncate_pad,
)
from .synthetic import SyntheticCorpus, SyntheticSpec, gen_synthetic_corpus


@dataclass
class Dataset:
    catalog: NewsCatalog
    users: list[UserSequence]
    titles: np.ndarray  # (num_news, max_title_len) token ids, PAD_ID padded
    click_counts: np.ndarray

    @property
    def num_news(self) -> int:
        return len(self.catalog)

    @property
    def vocab_size(self) -> int:
        return len(self.catalog.vocab)

    @property
    def eval_users(self) -> list[int]:
        return [i for i, u in enumerate(self.users) if u.has_eval]

    @property
    def categories(self) -> list[str]:
        return [a.category for a in self.catalog.articles]


def title_matrix(articles: list[NewsArticle], max_len: int | None = None) -> np.ndarray:
    width = max_len or max(len(a.title_tokens) for a in articles)
    out = np.full((len(articles), width), PAD_ID, dtype=np.int64)
    for i, a in enumerate(articles):
        toks = a.title_tokens[:width]
        out[i, : len(toks)] = toks
    return out


def load_dataset(news_path, behaviors_path, max_title_len: int = 30) -> Dataset:
    """Parse both MIND files and build per-user sequences and click counts."""
    for p in (news_path, behaviors_path):
        if not Path(p).is_file():
            raise DataError(f"missing data file: {p}")
    catalog = parse_news_tsv(news_path, max_title_len=max_title_len)
    if not catalog.articles:
        raise DataError(f"no usable articles in {news_path}")
    behaviors = parse_behaviors_tsv(behaviors_path, known_ids=catalog.index)
    users = build_user_sequences(behaviors.records, catalog.index)
    if not users:
        raise DataError(f"no user click sequences in {behaviors_path}")
    counts = np.zeros(len(catalog), dtype=np.int64)
    for u in users:
        np.add.at(counts, u.clicks, 1)
    for a, c in zip(catalog.articles, counts):
        a.click_count = int(c)
    width = min(max_title_len, max(len(a.title_tokens) for a in catalog.articles))
    return Dataset(catalog, users, title_matrix(catalog.articles, width), counts)
