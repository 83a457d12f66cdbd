"""Mixed objective (masked-item NLL + coverage-distance regularizer) and the training loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import numerics as nx
from .config import ModelConfig, TrainConfig
from .coverage import coverage_sum
from .data import Dataset
from .data.sequences import sample_masks, truncate_pad
from .model import DCAN, Batch, ForwardOutput
from .numerics import Adam, Tensor

log = logging.getLogger(__name__)

NORM_EPS = 1e-8


class NumericalError(RuntimeError):
    """Raised when a loss becomes NaN or infinite."""


@dataclass
class BatchLoss:
    main: Tensor
    diverse: Tensor
    total: Tensor
    count: int

    def values(self) -> tuple[float, float, float]:
        return self.main.item(), self.diverse.item(), self.total.item()


def main_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)`` rows."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise AssertionError("no masked positions in batch")
    logp = nx.log_softmax(logits, axis=-1)
    picked = logp[np.arange(labels.size), labels]
    return -picked.mean()


def diverse_loss(outputs: Tensor, coverage: Tensor) -> Tensor:
    """Mean of ``-||o/|o| - c/|c|||^2`` over rows; rows where either vector is zero add 0."""
    o_n = nx.l2_normalize(outputs, axis=-1, eps=NORM_EPS)
    c_n = nx.l2_normalize(coverage, axis=-1, eps=NORM_EPS)
    diff = o_n - c_n
    dist = (diff * diff).sum(axis=-1)
    live = (np.linalg.norm(outputs.data, axis=-1) > 0) & (np.linalg.norm(coverage.data, axis=-1) > 0)
    weights = live.astype(dist.dtype)
    return -(dist * weights).sum() * (1.0 / max(len(weights), 1))


def total_loss(main: Tensor, diverse: Tensor, gamma: float) -> Tensor:
    return main + diverse * gamma


def compute_loss(model: DCAN, batch: Batch, gamma: float, rng: np.random.Generator | None = None,
                 detach_coverage: bool = True) -> BatchLoss:
    fwd: ForwardOutput = model.forward(batch, rng)
    o = fwd.output[batch.mask_rows, batch.mask_cols]
    logits = model.head.catalog_logits(o, fwd.news)
    l_main = main_loss(logits, batch.labels)
    cov = coverage_sum(fwd.coverage)[batch.mask_rows, batch.mask_cols]
    if detach_coverage:
        cov = Tensor(cov.data)
    l_div = diverse_loss(o, cov)
    return BatchLoss(l_main, l_div, total_loss(l_main, l_div, gamma), int(batch.labels.size))


def training_window(clicks: list[int], n: int, rng: np.random.Generator) -> list[int]:
    """A random contiguous window of at most ``n`` clicks (the latest when it all fits)."""
    if len(clicks) <= n:
        return list(clicks)
    end = int(rng.integers(n, len(clicks) + 1))
    return list(clicks[end - n : end])


def make_batch(clicks_list: list[list[int]], n: int, rho: float, rng: np.random.Generator) -> Batch:
    seqs = []
    for clicks in clicks_list:
        window = training_window(clicks, n, rng)
        seqs.append(sample_masks(truncate_pad(window, n, mode="train"), rho, rng))
    return Batch.from_sequences(seqs).trimmed()


@dataclass
class EpochStats:
    epoch: int
    main: float
    diverse: float
    total: float
    seconds: float
    batches: list[tuple[float, float, float]] = field(default_factory=list)

    def log_line(self) -> str:
        return f"{self.epoch}\t{self.main:.6f}\t{self.diverse:.6f}\t{self.total:.6f}\t{self.seconds:.3f}"


class Trainer:
    def __init__(self, model: DCAN, dataset: Dataset, config: TrainConfig, dump_dir=None):
        config.validate()
        self.model = model
        self.dataset = dataset
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.optimizer = Adam(model.parameters(), lr=config.lr)
        self.dump_dir = Path(dump_dir) if dump_dir is not None else None
        self.users = [u.train_clicks for u in dataset.users if u.train_clicks]
        self.epoch = 0

    def step(self, batch: Batch) -> BatchLoss:
        model = self.model
        model.train()
        self.optimizer.zero_grad()
        loss = compute_loss(model, batch, self.config.gamma, self.rng, self.config.detach_coverage)
        main, div, total = loss.values()
        if not all(math.isfinite(v) for v in (main, div, total)):
            self._dump(batch, loss)
            raise NumericalError(f"non-finite loss at epoch {self.epoch}: main={main} diverse={div}")
        loss.total.backward()
        self.optimizer.step()
        model.mark_updated()
        return loss

    def train_epoch(self) -> EpochStats:
        start = time.perf_counter()
        self.epoch += 1
        order = self.rng.permutation(len(self.users))
        bs = self.config.batch_size
        n = self.model.config.max_len
        rows = []
        for i in range(0, len(order), bs):
            chunk = [self.users[j] for j in order[i : i + bs]]
            batch = make_batch(chunk, n, self.config.rho, self.rng)
            rows.append(self.step(batch).values())
        arr = np.asarray(rows, dtype=np.float64) if rows else np.zeros((1, 3))
        stats = EpochStats(self.epoch, *arr.mean(axis=0), time.perf_counter() - start, rows)
        log.info("epoch %d main=%.4f diverse=%.4f total=%.4f (%.1fs)",
                 stats.epoch, stats.main, stats.diverse, stats.total, stats.seconds)
        return stats

    def fit(self, epochs: int | None = None, log_path=None) -> list[EpochStats]:
        epochs = self.config.epochs if epochs is None else epochs
        history = []
        fh = open(log_path, "w", encoding="utf-8") if log_path else None
        try:
            for _ in range(epochs):
                stats = self.train_epoch()
                history.append(stats)
                if fh:
                    fh.write(stats.log_line() + "\n")
                    fh.flush()
        finally:
            if fh:
                fh.close()
        return history

    def _dump(self, batch: Batch, loss: BatchLoss) -> None:
        if self.dump_dir is None:
            return
        self.dump_dir.mkdir(parents=True, exist_ok=True)
        path = self.dump_dir / f"nan_batch_epoch{self.epoch}.npz"
        np.savez(path, slots=batch.slots, items=batch.items, mask_rows=batch.mask_rows,
                 mask_cols=batch.mask_cols, labels=batch.labels,
                 main=loss.main.data, diverse=loss.diverse.data)
        log.error("non-finite loss; offending batch written to %s", path)


def build_model(config: ModelConfig, dataset: Dataset, seed: int) -> DCAN:
    return DCAN(config, dataset.vocab_size, dataset.titles, seed=seed)


def train_model(model_cfg: ModelConfig, train_cfg: TrainConfig, dataset: Dataset,
                log_path=None, dump_dir=None) -> tuple[DCAN, list[EpochStats]]:
    model = build_model(model_cfg, dataset, train_cfg.seed)
    trainer = Trainer(model, dataset, train_cfg, dump_dir)
    return model, trainer.fit(log_path=log_path)
