"""Report figures: training curves, metric bars per variant and the head-count sweep."""

from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import EvalReport  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_training_curves(history, path, title: str = "training") -> Path:
    """Per-epoch ``L_main`` and ``L_diverse`` from a list of epoch stats."""
    epochs = [h.epoch for h in history]
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        a1.plot(epochs, [h.main for h in history], marker="o", ms=3, color="C0")
        a1.set_xlabel("epoch")
        a1.set_ylabel("main loss")
        a2.plot(epochs, [h.diverse for h in history], marker="o", ms=3, color="C3")
        a2.set_xlabel("epoch")
        a2.set_ylabel("diverse loss")
        a2.set_ylim(-4.1, 0.1)
        fig.suptitle(title)
        return _finish(fig, path)


def plot_metric_bars(results: dict[str, EvalReport], metrics, path, title: str = "") -> Path:
    """Grouped bars (mean with sample-std error bars), one panel per metric."""
    names = list(results)
    metrics = list(metrics)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(metrics), figsize=(2.6 * len(metrics) + 0.6, 3.2), squeeze=False)
        x = np.arange(len(names))
        for ax, m in zip(axes[0], metrics):
            means = [results[n].mean(m) for n in names]
            stds = [results[n].std(m) for n in names]
            ax.bar(x, means, yerr=stds, color=[f"C{i % 10}" for i in range(len(names))], capsize=2)
            ax.set_xticks(x)
            ax.set_xticklabels(names, rotation=55, ha="right", fontsize=7)
            ax.set_title(m)
            lo = min(mu - sd for mu, sd in zip(means, stds))
            hi = max(mu + sd for mu, sd in zip(means, stds))
            pad = 0.1 * (hi - lo) if hi > lo else 0.05
            ax.set_ylim(max(0.0, lo - pad), hi + pad)
        if title:
            fig.suptitle(title)
        return _finish(fig, path)


def plot_head_sweep(results: dict[str, EvalReport], metrics, path) -> Path:
    """Metric means against head count for variants named ``heads=N``."""
    sweep = sorted((int(re.sub(r"\D", "", k)), v) for k, v in results.items() if k.startswith("heads="))
    if not sweep:
        raise ValueError("no head-sweep variants to plot")
    heads = [h for h, _ in sweep]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        for i, m in enumerate(metrics):
            means = np.array([r.mean(m) for _, r in sweep])
            stds = np.array([r.std(m) for _, r in sweep])
            ax.errorbar(heads, means, yerr=stds, marker="o", ms=4, capsize=2, label=m, color=f"C{i}")
        ax.set_xticks(heads)
        ax.set_xlabel("attention heads")
        ax.set_ylabel("score")
        ax.legend(fontsize=7)
        return _finish(fig, path)
