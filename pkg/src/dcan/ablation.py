"""Ablation study: single-augmentation removals, the plain baseline and a head-count sweep."""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import AUGMENTATIONS, EvalConfig, ModelConfig, TrainConfig
from .data import Dataset
from .evaluation import EvalReport, evaluate_model, metric_names
from .training import train_model

log = logging.getLogger(__name__)

FULL = "DCAN"
PLAIN = "plain"


@dataclass(frozen=True)
class Variant:
    name: str
    group: str  # "removal" or "heads"
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)

    @property
    def slug(self) -> str:
        return re.sub(r"[^A-Za-z0-9]+", "_", self.name).strip("_") or "variant"

    def configs(self, model: ModelConfig, train: TrainConfig) -> tuple[ModelConfig, TrainConfig]:
        return dataclasses.replace(model, **self.model), dataclasses.replace(train, **self.train)


def removal_name(aug: str) -> str:
    label = aug.capitalize()
    return f"-C^{label}-DOR^{label}"


def _without(model: ModelConfig, augs) -> dict:
    """Config patch turning off ``augs`` and freeing any heads pinned to them."""
    patch = {f"phi_{a}": False for a in augs}
    if model.heads.strip():
        names = [h.strip().lower() for h in model.heads.split(",")]
        patch["heads"] = ",".join("none" if h in augs else h for h in names)
    return patch


def ablation_variants(model: ModelConfig, head_sweep=(8, 10, 20, 25)) -> list[Variant]:
    """Full model, one removal per augmentation, the plain baseline, then the head sweep.

    Removing an augmentation that is already disabled yields the base config
    unchanged, so its metrics equal the full model's under the same seed.
    """
    variants = [Variant(FULL, "removal")]
    for aug in AUGMENTATIONS:
        variants.append(Variant(removal_name(aug), "removal", _without(model, [aug])))
    variants.append(Variant(PLAIN, "removal", _without(model, AUGMENTATIONS), {"gamma": 0.0}))
    for n in head_sweep:
        patch = {"n_heads": int(n)}
        if model.heads.strip():
            names = [h.strip() for h in model.heads.split(",")]
            patch["heads"] = ",".join((names + ["none"] * n)[:n])
        variants.append(Variant(f"heads={n}", "heads", patch))
    return variants


def run_variant(variant: Variant, model: ModelConfig, train: TrainConfig, evalc: EvalConfig,
                dataset: Dataset, seeds) -> EvalReport:
    """Train one model per seed and evaluate it with the matching negative-sampling seed."""
    mcfg, tcfg = variant.configs(model, train)
    report = EvalReport(metric_names(evalc))
    for s in seeds:
        m, _ = train_model(mcfg, dataclasses.replace(tcfg, seed=int(s)), dataset)
        report.per_seed[int(s)] = evaluate_model(m, dataset, [int(s)], evalc).per_seed[int(s)]
        log.info("%s seed %d: %s", variant.name, s, report.per_seed[int(s)])
    return report


def _save(path: Path, variant: Variant, report: EvalReport) -> None:
    payload = {"variant": variant.name, "metrics": report.metrics,
               "per_seed": {str(k): v for k, v in sorted(report.per_seed.items())}}
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")
    tmp.replace(path)


def _load(path: Path) -> EvalReport:
    payload = json.loads(path.read_text(encoding="utf-8"))
    return EvalReport(payload["metrics"], {int(k): v for k, v in payload["per_seed"].items()})


def _worker(args):
    variant, model, train, evalc, dataset, seeds = args
    return run_variant(variant, model, train, evalc, dataset, seeds)


def run_ablation(model: ModelConfig, train: TrainConfig, evalc: EvalConfig, dataset: Dataset,
                 out_dir, seeds=None, variants: list[Variant] | None = None,
                 workers: int = 1) -> dict[str, EvalReport]:
    """Run every variant, reusing finished results stored under ``out_dir``.

    Each variant is saved as soon as it completes, so an interrupted study
    resumes where it stopped. ``workers > 1`` trains variants in parallel
    processes; seeds stay per-variant, so results match a sequential run.
    """
    seeds = tuple(evalc.seeds if seeds is None else seeds)
    variants = variants if variants is not None else ablation_variants(model, evalc.head_sweep)
    store = Path(out_dir) / "variants"
    store.mkdir(parents=True, exist_ok=True)
    results: dict[str, EvalReport] = {}
    todo = []
    for v in variants:
        path = store / f"{v.slug}.json"
        if path.is_file():
            cached = _load(path)
            if set(cached.per_seed) == set(seeds):
                log.info("skipping %s (already complete)", v.name)
                results[v.name] = cached
                continue
        todo.append(v)

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = [(v, model, train, evalc, dataset, seeds) for v in todo]
            for v, report in zip(todo, pool.map(_worker, jobs)):
                _save(store / f"{v.slug}.json", v, report)
                results[v.name] = report
    else:
        for v in todo:
            report = run_variant(v, model, train, evalc, dataset, seeds)
            _save(store / f"{v.slug}.json", v, report)
            results[v.name] = report
    return {v.name: results[v.name] for v in variants}


def format_table(results: dict[str, EvalReport], metrics=None) -> str:
    """Tab-separated ``variant  metric_mean  metric_std ...`` table."""
    first = next(iter(results.values()))
    metrics = list(metrics or first.metrics)
    header = ["variant"] + [f"{m}{suffix}" for m in metrics for suffix in ("_mean", "_std")]
    rows = ["\t".join(header)]
    for name, rep in results.items():
        cells = [name]
        for m in metrics:
            cells += [f"{rep.mean(m):.6f}", f"{rep.std(m):.6f}"]
        rows.append("\t".join(cells))
    return "\n".join(rows) + "\n"


def records(results: dict[str, EvalReport]) -> list[dict]:
    out = []
    for name, rep in results.items():
        out.extend(rep.records(name))
    return out
