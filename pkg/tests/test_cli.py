import json

import pytest

from dcan.ablation import removal_name
from dcan.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main

TINY = """\
[data]
news = {root}/data/news.tsv
behaviors = {root}/data/behaviors.tsv

[synth]
num_users = 30
num_news = 40
vocab_size = 120
min_clicks = 6
max_clicks = 12

[model]
d = 16
n_heads = 4
num_layers = 1
max_len = 10
word_dim = 16
news_heads = 2

[train]
epochs = 2
batch_size = 16

[eval]
seeds = 0,1,2,3,4
head_sweep = 4,8
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.ini"
    cfg.write_text(TINY.format(root=root))
    assert main(["synth", "--config", str(cfg), "--out", str(root / "data")]) == EXIT_OK
    assert main(["train", "--config", str(cfg), "--out", str(root / "run")]) == EXIT_OK
    return root, cfg


def test_synth_refuses_overwrite(workspace, capsys):
    root, cfg = workspace
    assert main(["synth", "--config", str(cfg), "--out", str(root / "data")]) == EXIT_USAGE
    assert "--force" in capsys.readouterr().err


def test_bad_override_is_usage_error(workspace):
    root, cfg = workspace
    assert main(["synth", "--config", str(cfg), "--out", str(root / "x"), "train.gamma=-1"]) == EXIT_USAGE


def test_unknown_flag():
    assert main(["train", "--no-such-flag"]) == EXIT_USAGE


def test_missing_data(workspace, tmp_path, capsys):
    _, cfg = workspace
    code = main(["train", "--config", str(cfg), "--out", str(tmp_path), f"data.news={tmp_path}/nope.tsv"])
    assert code == EXIT_DATA
    assert "nope.tsv" in capsys.readouterr().err


def test_train_outputs(workspace):
    root, _ = workspace
    run = root / "run"
    log = (run / "train_log.tsv").read_text().splitlines()
    assert len(log) == 2
    assert [line.split("\t")[0] for line in log] == ["1", "2"]
    for name in ("checkpoint.bin", "checkpoint.manifest", "train_config.ini", "figures/training.png"):
        assert (run / name).is_file(), name
    assert "gamma = 0.3" in (run / "train_config.ini").read_text()


def test_eval_report_and_reload(workspace, tmp_path):
    from dcan.cli import _dataset, load_checkpoint
    from dcan.config import load_config
    from dcan.evaluation import evaluate_model

    root, cfg = workspace
    out = tmp_path / "ev"
    assert main(["eval", "--config", str(cfg), "--out", str(out),
                 "--checkpoint", str(root / "run" / "checkpoint.bin")]) == EXIT_OK
    recs = [json.loads(line) for line in (out / "report.jsonl").read_text().splitlines()]
    assert len(recs) == 5
    assert sorted(r["seed"] for r in recs) == [0, 1, 2, 3, 4]
    assert set(recs[0]) == {"variant", "seed", "auc", "ndcg@5", "ndcg@10", "div@10", "div@20", "div@50"}
    assert (out / "figures" / "metrics.png").is_file()
    assert (out / "eval_config.ini").is_file()

    # the same weights trained in memory give the same metrics as the reloaded checkpoint
    from dcan.training import train_model

    c = load_config(cfg, [])
    dataset = _dataset(c)
    in_memory, _ = train_model(c.model, c.train, dataset)
    reloaded = load_checkpoint(root / "run" / "checkpoint.bin", dataset)
    a = evaluate_model(in_memory, dataset, [0, 1], c.eval)
    b = evaluate_model(reloaded, dataset, [0, 1], c.eval)
    assert a.per_seed == b.per_seed
    for r in recs[:2]:
        assert r["auc"] == b.per_seed[r["seed"]]["auc"]


def test_eval_deterministic(workspace, tmp_path):
    root, cfg = workspace
    ck = str(root / "run" / "checkpoint.bin")
    for name in ("a", "b"):
        assert main(["eval", "--config", str(cfg), "--out", str(tmp_path / name), "--checkpoint", ck,
                     "eval.seeds=0,1"]) == EXIT_OK
    for f in ("report.tsv", "report.jsonl", "figures/metrics.png"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_eval_missing_checkpoint(workspace, tmp_path):
    _, cfg = workspace
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_DATA


def test_eval_corrupt_checkpoint(workspace, tmp_path):
    root, cfg = workspace
    raw = (root / "run" / "checkpoint.bin").read_bytes()
    (tmp_path / "checkpoint.bin").write_bytes(raw[:100])
    (tmp_path / "checkpoint.manifest").write_bytes((root / "run" / "checkpoint.manifest").read_bytes())
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_DATA


def test_seed_flag_targets_command(workspace, tmp_path):
    root, cfg = workspace
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path), "--seed", "3",
                 "--checkpoint", str(root / "run" / "checkpoint.bin")]) == EXIT_OK
    recs = (tmp_path / "report.jsonl").read_text().splitlines()
    assert [json.loads(r)["seed"] for r in recs] == [3]


def test_ablate_rows_names_and_resume(workspace, tmp_path, caplog):
    _, cfg = workspace
    out = tmp_path / "abl"
    args = ["ablate", "--config", str(cfg), "--out", str(out), "eval.seeds=0", "train.epochs=1"]
    assert main(args) == EXIT_OK
    rows = (out / "ablation.tsv").read_text().splitlines()[1:]
    names = [r.split("\t")[0] for r in rows]
    assert len(names) >= 6
    assert names[:6] == ["DCAN"] + [removal_name(a) for a in ("decay", "circle", "log", "gamma")] + ["plain"]
    assert names[1] == "-C^Decay-DOR^Decay"
    assert names[6:] == ["heads=4", "heads=8"]
    assert (out / "figures" / "ablation.png").is_file()
    assert (out / "figures" / "head_sweep.png").is_file()

    first = (out / "ablation.tsv").read_bytes()
    stamps = {p.name: p.stat().st_mtime_ns for p in (out / "variants").glob("*.json")}
    caplog.set_level("INFO", logger="dcan.ablation")
    assert main(args) == EXIT_OK
    assert sum("already complete" in r.message for r in caplog.records) == len(names)
    assert {p.name: p.stat().st_mtime_ns for p in (out / "variants").glob("*.json")} == stamps
    assert (out / "ablation.tsv").read_bytes() == first
