"""Command-line entry point: ``dcan {synth,train,eval,ablate}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure (non-finite loss).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("dcan")


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with [data] [synth] [model] [train] [eval] [run]")
    common.add_argument("--seed", type=int, help="seed for this command (synth, train or evaluation)")
    common.add_argument("--out", type=Path, help="output directory (overrides run.out)")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("--threads", type=int, help="BLAS threads; ablation workers with --parallel")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("overrides", nargs="*", metavar="section.key=value")

    parser = argparse.ArgumentParser(prog="dcan", description="Coverage-aware diversified news recommender.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic news.tsv / behaviors.tsv pair")
    sub.add_parser("train", parents=[common], help="train a model and write a checkpoint")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    ev.add_argument("--checkpoint", type=Path, help="checkpoint file (default: OUT/checkpoint.bin)")
    ab = sub.add_parser("ablate", parents=[common], help="run the ablation study")
    ab.add_argument("--parallel", action="store_true", help="train variants in --threads processes")
    return parser


def _limit_threads(n: int | None) -> None:
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _resolve(args):
    from .config import load_config

    overrides = list(args.overrides)
    if args.out is not None:
        overrides.append(f"run.out={args.out}")
    if args.threads is not None:
        overrides.append(f"run.threads={args.threads}")
    if args.seed is not None:
        key = {"synth": "synth.seed", "eval": "eval.seeds"}.get(args.command, "train.seed")
        overrides.append(f"{key}={args.seed}")
    return load_config(args.config, overrides)


def _prepare_out(out: Path, outputs: list[str], force: bool) -> None:
    existing = [name for name in outputs if (out / name).exists()]
    if existing and not force:
        raise UsageError(f"{out / existing[0]} exists; use --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)


def _echo_config(cfg, out: Path, command: str) -> None:
    (out / f"{command}_config.ini").write_text(cfg.to_ini(), encoding="utf-8")


def _dataset(cfg):
    from .data import load_dataset

    return load_dataset(cfg.data.news, cfg.data.behaviors, cfg.model.max_title_len)


# -- commands ---------------------------------------------------------------


def cmd_synth(cfg, force: bool) -> int:
    from .data import SyntheticSpec, gen_synthetic_corpus

    out = Path(cfg.run.out)
    _prepare_out(out, ["news.tsv", "behaviors.tsv"], force)
    s = cfg.synth
    spec = SyntheticSpec(num_users=s.num_users, num_news=s.num_news, num_topics=s.num_topics,
                         vocab_size=s.vocab_size, stickiness=s.stickiness, min_clicks=s.min_clicks,
                         max_clicks=s.max_clicks, seed=s.seed)
    corpus = gen_synthetic_corpus(spec, out)
    _echo_config(cfg, out, "synth")
    clicks = sum(len(c) for c in corpus.click_streams)
    print(f"news\t{corpus.news_path}")
    print(f"behaviors\t{corpus.behaviors_path}")
    print(f"users\t{s.num_users}\nnews_items\t{s.num_news}\ntopics\t{s.num_topics}\nclicks\t{clicks}")
    return EXIT_OK


def cmd_train(cfg, force: bool) -> int:
    from .numerics import save_tensors, write_manifest
    from .plotting import plot_training_curves
    from .training import Trainer, build_model

    out = Path(cfg.run.out)
    dataset = _dataset(cfg)
    _prepare_out(out, ["checkpoint.bin", "train_log.tsv"], force)
    _echo_config(cfg, out, "train")
    model = build_model(cfg.model, dataset, cfg.train.seed)
    trainer = Trainer(model, dataset, cfg.train, dump_dir=out)
    history = trainer.fit(log_path=out / "train_log.tsv")
    save_tensors(out / "checkpoint.bin", model.state_dict())
    manifest = model.manifest()
    manifest.update({k: v for k, v in cfg.as_flat().items() if k.startswith("train.")})
    write_manifest(out / "checkpoint.manifest", manifest)
    if history:
        plot_training_curves(history, out / "figures" / "training.png")
        last = history[-1]
        print(f"epochs\t{len(history)}\nmain\t{last.main:.6f}\ndiverse\t{last.diverse:.6f}\ntotal\t{last.total:.6f}")
    print(f"checkpoint\t{out / 'checkpoint.bin'}")
    return EXIT_OK


def model_config_from_manifest(values: dict[str, str]):
    """Rebuild the architecture a checkpoint was trained with."""
    import typing

    from .config import ConfigError, ModelConfig, _coerce

    hints = typing.get_type_hints(ModelConfig)
    kwargs = {}
    for key, raw in values.items():
        section, _, name = key.partition(".")
        if section == "model" and name in hints:
            kwargs[name] = _coerce(raw, hints[name], key)
    try:
        cfg = ModelConfig(**kwargs)
        cfg.validate()
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"bad checkpoint manifest: {exc}") from exc
    return cfg


def load_checkpoint(path: Path, dataset):
    from .data import DataError
    from .numerics import load_tensors, read_manifest
    from .training import build_model

    manifest_path = path.with_suffix(".manifest")
    if not path.is_file() or not manifest_path.is_file():
        raise DataError(f"checkpoint or manifest missing: {path}")
    values = read_manifest(manifest_path)
    mcfg = model_config_from_manifest(values)
    if int(values.get("model.num_news", dataset.num_news)) != dataset.num_news or \
            int(values.get("model.vocab_size", dataset.vocab_size)) != dataset.vocab_size:
        raise DataError("checkpoint catalog/vocabulary size does not match the dataset")
    model = build_model(mcfg, dataset, 0)
    try:
        model.load_state_dict(load_tensors(path))
    except (ValueError, KeyError) as exc:
        raise DataError(f"unreadable checkpoint {path}: {exc}") from exc
    return model


def _write_report(out: Path, stem: str, results: dict) -> None:
    from .ablation import format_table, records

    (out / f"{stem}.tsv").write_text(format_table(results), encoding="utf-8")
    with open(out / f"{stem}.jsonl", "w", encoding="utf-8") as fh:
        for rec in records(results):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_eval(cfg, force: bool, checkpoint: Path | None) -> int:
    from .evaluation import evaluate_model
    from .plotting import plot_metric_bars

    out = Path(cfg.run.out)
    dataset = _dataset(cfg)
    model = load_checkpoint(checkpoint or out / "checkpoint.bin", dataset)
    _prepare_out(out, ["report.tsv", "report.jsonl"], force)
    _echo_config(cfg, out, "eval")
    report = evaluate_model(model, dataset, cfg.eval.seeds, cfg.eval)
    results = {"model": report}
    _write_report(out, "report", results)
    plot_metric_bars(results, report.metrics, out / "figures" / "metrics.png")
    sys.stdout.write((out / "report.tsv").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_ablate(cfg, force: bool, parallel: bool) -> int:
    from .ablation import run_ablation
    from .plotting import plot_head_sweep, plot_metric_bars

    out = Path(cfg.run.out)
    dataset = _dataset(cfg)
    if force and (out / "variants").is_dir():
        for f in (out / "variants").glob("*.json"):
            f.unlink()
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out, "ablate")
    workers = cfg.run.threads if parallel else 1
    results = run_ablation(cfg.model, cfg.train, cfg.eval, dataset, out, workers=workers)
    _write_report(out, "ablation", results)
    removal = {k: v for k, v in results.items() if not k.startswith("heads=")}
    shown = [m for m in ("ndcg@10", "div@20", "div@50") if m in next(iter(results.values())).metrics]
    plot_metric_bars(removal, shown, out / "figures" / "ablation.png")
    if any(k.startswith("heads=") for k in results):
        plot_head_sweep(results, shown, out / "figures" / "head_sweep.png")
    sys.stdout.write((out / "ablation.tsv").read_text(encoding="utf-8"))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    _limit_threads(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    from .config import ConfigError
    from .data import DataError
    from .training import NumericalError

    try:
        cfg = _resolve(args)
        if args.command == "synth":
            return cmd_synth(cfg, args.force)
        if args.command == "train":
            return cmd_train(cfg, args.force)
        if args.command == "eval":
            return cmd_eval(cfg, args.force, args.checkpoint)
        return cmd_ablate(cfg, args.force, args.parallel)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
