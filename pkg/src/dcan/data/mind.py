"""MIND-format ``news.tsv`` / ``behaviors.tsv`` readers and title tokenization."""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

log = logging.getLogger(__name__)

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
PAD_ID = 0
UNK_ID = 1

TIME_FORMAT = "%m/%d/%Y %I:%M:%S %p"
_SPLIT = re.compile(r"[^0-9a-z]+")


class DataError(ValueError):
    """Input files are missing, empty or unusable."""


def tokenize(text: str) -> list[str]:
    return [t for t in _SPLIT.split(text.lower()) if t]


@dataclass
class NewsArticle:
    news_id: str
    title_tokens: list[int]
    category: str
    click_count: int = 0


@dataclass
class Vocabulary:
    words: list[str]

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.index.get(t, UNK_ID) for t in tokens]


@dataclass
class NewsCatalog:
    articles: list[NewsArticle]
    vocab: Vocabulary
    skipped: int = 0
    duplicates: int = 0
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {a.news_id: i for i, a in enumerate(self.articles)}

    def __len__(self) -> int:
        return len(self.articles)


def parse_news_tsv(path, max_title_len: int = 30) -> NewsCatalog:
    """Read a MIND news file.

    Rows with fewer than 7 columns or an empty tokenized title are skipped with a
    warning. A repeated news id replaces the earlier row. The vocabulary is ordered
    by descending frequency (ties alphabetical) after the two reserved sentinels.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise DataError(f"empty news file: {path}")

    rows: dict[str, tuple[list[str], str]] = {}
    skipped = duplicates = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 7:
            skipped += 1
            log.warning("%s:%d: expected >= 7 columns, got %d; skipped", path, lineno, len(cols))
            continue
        news_id, category, title = cols[0].strip(), cols[1].strip(), cols[3]
        tokens = tokenize(title)[:max_title_len]
        if not news_id or not tokens:
            skipped += 1
            log.warning("%s:%d: empty news id or title; skipped", path, lineno)
            continue
        if news_id in rows:
            duplicates += 1
            log.warning("%s:%d: duplicate news id %s; keeping last occurrence", path, lineno, news_id)
            del rows[news_id]
        rows[news_id] = (tokens, category)

    freq = Counter(t for tokens, _ in rows.values() for t in tokens)
    words = [PAD_TOKEN, UNK_TOKEN] + sorted(freq, key=lambda w: (-freq[w], w))
    vocab = Vocabulary(words)
    articles = [NewsArticle(nid, vocab.encode(tokens), cat) for nid, (tokens, cat) in rows.items()]
    return NewsCatalog(articles, vocab, skipped=skipped, duplicates=duplicates)


@dataclass
class ImpressionRecord:
    impression_id: str
    user_id: str
    timestamp: datetime
    history: list[str]
    clicked: list[str]
    non_clicked: list[str]


@dataclass
class BehaviorLog:
    records: list[ImpressionRecord]
    unknown_ids: int = 0
    malformed_tokens: int = 0
    skipped_rows: int = 0


def parse_behaviors_tsv(path, known_ids=None) -> BehaviorLog:
    """Read a MIND impression log.

    Impression tokens look like ``N123-1`` (clicked) or ``N123-0``. Ids absent
    from ``known_ids`` (when given) are dropped and counted.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise DataError(f"empty behaviors file: {path}")
    out = BehaviorLog([])

    def known(nid: str) -> bool:
        if known_ids is None or nid in known_ids:
            return True
        out.unknown_ids += 1
        log.warning("%s: unknown news id %s dropped", path, nid)
        return False

    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 5:
            out.skipped_rows += 1
            log.warning("%s:%d: expected 5 columns, got %d; skipped", path, lineno, len(cols))
            continue
        imp_id, user_id, ts, hist, imps = cols[:5]
        try:
            when = datetime.strptime(ts.strip(), TIME_FORMAT)
        except ValueError:
            out.skipped_rows += 1
            log.warning("%s:%d: bad timestamp %r; skipped", path, lineno, ts)
            continue
        history = [n for n in hist.split() if known(n)]
        clicked, non_clicked = [], []
        for tok in imps.split():
            nid, sep, label = tok.rpartition("-")
            if not sep or not nid or label not in ("0", "1"):
                out.malformed_tokens += 1
                log.warning("%s:%d: malformed impression token %r dropped", path, lineno, tok)
                continue
            if known(nid):
                (clicked if label == "1" else non_clicked).append(nid)
        out.records.append(ImpressionRecord(imp_id.strip(), user_id.strip(), when, history, clicked, non_clicked))
    return out
