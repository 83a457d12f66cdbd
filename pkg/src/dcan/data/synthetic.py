"""Seeded synthetic corpus in MIND format.

News belong to topics; titles mix topic-specific and shared words. Each user
follows a sticky topic process: after every click they keep their topic with
probability ``stickiness`` and otherwise redraw one uniformly over all topics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .mind import TIME_FORMAT


@dataclass
class SyntheticSpec:
    num_users: int = 500
    num_news: int = 200
    num_topics: int = 8
    vocab_size: int = 400
    stickiness: float = 0.8
    min_clicks: int = 8
    max_clicks: int = 40
    title_len: tuple[int, int] = (5, 10)
    topic_word_share: float = 0.75
    history_fraction: float = 0.5
    impression_negatives: int = 4
    seed: int = 7


@dataclass
class SyntheticCorpus:
    news_path: Path
    behaviors_path: Path
    news_topics: list[int]
    click_streams: dict[str, list[str]] = field(default_factory=dict)
    topic_streams: dict[str, list[int]] = field(default_factory=dict)


def _topic_stream(rng: np.random.Generator, length: int, num_topics: int, stickiness: float) -> list[int]:
    topic = int(rng.integers(num_topics))
    out = [topic]
    for _ in range(length - 1):
        if rng.random() >= stickiness:
            topic = int(rng.integers(num_topics))
        out.append(topic)
    return out


def gen_synthetic_corpus(spec: SyntheticSpec, out_dir) -> SyntheticCorpus:
    """Write ``news.tsv`` and ``behaviors.tsv`` under ``out_dir``; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    k = spec.num_topics

    words = [f"w{i:04d}" for i in range(spec.vocab_size)]
    # first half of the vocabulary is split among topics, second half is shared
    topic_words = np.array_split(np.arange(spec.vocab_size // 2), k)
    shared = np.arange(spec.vocab_size // 2, spec.vocab_size)

    news_topics = [i % k for i in range(spec.num_news)]
    rng.shuffle(news_topics)
    news_ids = [f"N{i + 1}" for i in range(spec.num_news)]
    by_topic = [[i for i, t in enumerate(news_topics) if t == topic] for topic in range(k)]
    # Zipf-like popularity inside each topic
    popularity = [1.0 / np.arange(1, len(items) + 1) ** 0.8 for items in by_topic]
    popularity = [p / p.sum() for p in popularity]

    news_lines = []
    for i, nid in enumerate(news_ids):
        length = int(rng.integers(spec.title_len[0], spec.title_len[1] + 1))
        own = topic_words[news_topics[i]]
        title = [
            words[int(rng.choice(own))] if rng.random() < spec.topic_word_share else words[int(rng.choice(shared))]
            for _ in range(length)
        ]
        cat = f"topic{news_topics[i]}"
        news_lines.append("\t".join([nid, cat, cat, " ".join(title), "", "", ""]))

    base = datetime(2019, 11, 9, 0, 0, 0)
    corpus = SyntheticCorpus(out_dir / "news.tsv", out_dir / "behaviors.tsv", news_topics)
    beh_lines = []
    imp_id = 0
    for u in range(spec.num_users):
        uid = f"U{u + 1}"
        length = int(rng.integers(spec.min_clicks, spec.max_clicks + 1))
        topics = _topic_stream(rng, length, k, spec.stickiness)
        clicks = [by_topic[t][int(rng.choice(len(by_topic[t]), p=popularity[t]))] for t in topics]
        corpus.click_streams[uid] = [news_ids[c] for c in clicks]
        corpus.topic_streams[uid] = topics

        n_hist = max(1, int(round(length * spec.history_fraction)))
        history = " ".join(news_ids[c] for c in clicks[:n_hist])
        when = base + timedelta(minutes=int(rng.integers(0, 600)))
        for c in clicks[n_hist:]:
            when += timedelta(minutes=int(rng.integers(1, 120)))
            others = rng.choice(spec.num_news, size=spec.impression_negatives, replace=False)
            tokens = [f"{news_ids[c]}-1"] + [f"{news_ids[o]}-0" for o in others if o != c]
            rng.shuffle(tokens)
            imp_id += 1
            beh_lines.append("\t".join([str(imp_id), uid, when.strftime(TIME_FORMAT), history, " ".join(tokens)]))
        if n_hist == length:
            imp_id += 1
            beh_lines.append("\t".join([str(imp_id), uid, when.strftime(TIME_FORMAT), history, ""]))

    corpus.news_path.write_text("\n".join(news_lines) + "\n", encoding="utf-8")
    corpus.behaviors_path.write_text("\n".join(beh_lines) + "\n", encoding="utf-8")
    return corpus
