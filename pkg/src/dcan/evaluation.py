"""Leave-one-out evaluation: AUC, NDCG@k and DIV@k (1 - intra-list similarity)."""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .config import EvalConfig
from .data import Dataset
from .data.sequences import MASK, NUM_NEGATIVES, sample_negatives, truncate_pad
from .model import DCAN, Batch

log = logging.getLogger(__name__)


@dataclass
class RankedList:
    """Candidates sorted by descending score, with the held-out positive."""

    items: np.ndarray
    scores: np.ndarray
    positive: int

    @classmethod
    def from_scores(cls, candidates, scores, positive: int) -> "RankedList":
        candidates = np.asarray(candidates)
        scores = np.asarray(scores, dtype=np.float64)
        if len(set(candidates.tolist())) != len(candidates):
            raise ValueError("duplicate candidates in ranked list")
        if int(np.sum(candidates == positive)) != 1:
            raise ValueError("ranked list needs exactly one positive")
        order = np.argsort(-scores, kind="stable")
        return cls(candidates[order], scores[order], int(positive))

    @property
    def positive_score(self) -> float:
        return float(self.scores[self.items == self.positive][0])

    @property
    def rank(self) -> int:
        """1-based rank of the positive; tied negatives are placed ahead of it."""
        s = self.positive_score
        neg = self.scores[self.items != self.positive]
        return 1 + int(np.sum(neg >= s))

    def top(self, k: int) -> np.ndarray:
        return self.items[:k]


def auc(ranked: RankedList) -> float:
    s = ranked.positive_score
    neg = ranked.scores[ranked.items != ranked.positive]
    if neg.size == 0:
        return 1.0
    return float((np.sum(neg < s) + 0.5 * np.sum(neg == s)) / neg.size)


def ndcg_at_k(ranked: RankedList, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    r = ranked.rank
    return 1.0 / math.log2(r + 1) if r <= k else 0.0


def div_at_k(top_items, embeddings: np.ndarray | None = None, categories=None) -> float:
    """``1 - mean pairwise similarity`` over ``top_items``.

    Similarity is cosine between rows of ``embeddings``, or, when ``categories``
    is given instead, 1 for a shared category and 0 otherwise.
    """
    top = np.asarray(top_items)
    k = len(top)
    if k < 2:
        raise ValueError("diversity needs at least two items")
    iu = np.triu_indices(k, 1)
    if categories is not None:
        cats = np.asarray(categories)[top]
        sims = (cats[:, None] == cats[None, :]).astype(np.float64)
    else:
        e = np.asarray(embeddings, dtype=np.float64)[top]
        norms = np.linalg.norm(e, axis=1, keepdims=True)
        e = e / np.where(norms > 0, norms, 1.0)
        sims = e @ e.T
    return float(1.0 - sims[iu].mean())


def metric_names(cfg: EvalConfig) -> list[str]:
    return ["auc"] + [f"ndcg@{k}" for k in cfg.ndcg_ks] + [f"div@{k}" for k in cfg.div_ks]


@dataclass
class EvalReport:
    metrics: list[str]
    per_seed: dict[int, dict[str, float]] = field(default_factory=dict)

    def mean(self, metric: str) -> float:
        return float(np.mean([v[metric] for v in self.per_seed.values()]))

    def std(self, metric: str) -> float:
        vals = [v[metric] for v in self.per_seed.values()]
        return statistics.stdev(vals) if len(vals) > 1 else 0.0

    def summary(self) -> dict[str, tuple[float, float]]:
        return {m: (self.mean(m), self.std(m)) for m in self.metrics}

    def records(self, variant: str = "model") -> list[dict]:
        return [{"variant": variant, "seed": s, **vals} for s, vals in sorted(self.per_seed.items())]


def _inference_inputs(dataset: Dataset, user: int, split: str) -> tuple[list[int], int]:
    clicks = dataset.users[user].clicks
    cut = len(clicks) - 1 if split == "test" else len(clicks) - 2
    # the held-out position is never part of the model input
    return clicks[:cut], clicks[cut]


def evaluate_seed(model: DCAN, dataset: Dataset, seed: int, cfg: EvalConfig) -> dict[str, float]:
    """Per-user metrics averaged over evaluation users for one negative-sampling seed."""
    rng = np.random.default_rng(seed)
    users = dataset.eval_users
    n = model.config.max_len
    model.eval()
    news = model.cached_catalog()
    news_np = news.data
    cats = dataset.categories if cfg.similarity == "category" else None
    names = metric_names(cfg)
    sums = dict.fromkeys(names, 0.0)
    short_pools = 0

    for start in range(0, len(users), cfg.batch_size):
        chunk = users[start : start + cfg.batch_size]
        seqs, cands, positives, histories = [], [], [], []
        for u in chunk:
            inputs, positive = _inference_inputs(dataset, u, cfg.split)
            padded = truncate_pad(inputs, n, mode="inference")
            assert padded.slots[-1] == MASK
            neg = sample_negatives(dataset.users[u].clicks, dataset.click_counts, rng,
                                   NUM_NEGATIVES, cfg.alpha, user=u, positive=positive, warn=False)
            # small catalogs force sampling with replacement; rank each distinct item once
            cand = np.concatenate([[positive], neg.negatives])
            _, first = np.unique(cand, return_index=True)
            short_pools += len(first) < len(cand)
            seqs.append(padded)
            cands.append(cand[np.sort(first)])
            positives.append(positive)
            histories.append(inputs)
        batch = Batch.from_sequences(seqs).trimmed()
        with nx.no_grad():
            out = model.forward(batch, news=news).output
            o = out[:, -1]
            width = max(len(c) for c in cands)
            # ragged candidate lists are right-padded with their positive and trimmed after scoring
            cand = np.stack([np.concatenate([c, np.full(width - len(c), c[0])]) for c in cands])
            scores = model.head.candidate_logits(o, news, cand).data
            if cfg.ranking == "catalog":
                full = model.head.catalog_logits(o, news).data
        for i, u in enumerate(chunk):
            m = len(cands[i])
            ranked = RankedList.from_scores(cand[i, :m], scores[i, :m], positives[i])
            sums["auc"] += auc(ranked)
            for k in cfg.ndcg_ks:
                sums[f"ndcg@{k}"] += ndcg_at_k(ranked, k)
            if cfg.ranking == "catalog":
                row = full[i].copy()
                row[np.asarray(histories[i])] = -np.inf
                order = np.argsort(-row, kind="stable")
            else:
                order = ranked.items
            for k in cfg.div_ks:
                top = order[: min(k, len(order))]
                sums[f"div@{k}"] += div_at_k(top, news_np, cats)
    if short_pools:
        log.warning("%d users had fewer than %d unseen news; negatives drawn with replacement and deduplicated",
                    short_pools, NUM_NEGATIVES)
    count = max(len(users), 1)
    return {m: v / count for m, v in sums.items()}


def evaluate_model(model: DCAN, dataset: Dataset, seeds=None, cfg: EvalConfig | None = None) -> EvalReport:
    cfg = cfg or EvalConfig()
    seeds = cfg.seeds if seeds is None else seeds
    if max(cfg.div_ks) > NUM_NEGATIVES + 1 and cfg.ranking == "candidates":
        log.warning("div cutoff exceeds the %d-candidate list; using the full list", NUM_NEGATIVES + 1)
    report = EvalReport(metric_names(cfg))
    for s in seeds:
        report.per_seed[int(s)] = evaluate_seed(model, dataset, int(s), cfg)
    return report
