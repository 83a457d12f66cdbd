"""Typed configuration sections and the flat ``key = value`` INI run file.

A run file has the sections ``[data]``, ``[synth]``, ``[model]``, ``[train]``,
``[eval]`` and ``[run]``. Every key is checked against the dataclass fields
below before any work starts; unknown sections or keys raise :class:`ConfigError`.
Command-line overrides use dotted keys, e.g. ``train.gamma=0.5``.
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

AUGMENTATIONS = ("decay", "circle", "log", "gamma")


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    d: int = 128
    n_heads: int = 8
    num_layers: int = 2
    max_len: int = 50
    dropout: float = 0.2
    word_dim: int = 200
    max_title_len: int = 30
    news_layers: int = 1
    news_heads: int = 8
    init_std: float = 0.02
    # amplitude of the sinusoidal word positions relative to unit-scale word embeddings
    word_position_scale: float = 0.1
    eta: float = 0.9
    freq: float = 10000.0
    beta: float = 1.0
    phi_decay: bool = True
    phi_circle: bool = True
    phi_log: bool = True
    phi_gamma: bool = True
    # comma-separated, one entry per head ("decay", "circle", "log", "gamma", "none");
    # empty means enabled augmentations on the first heads, "none" on the rest
    heads: str = ""
    circle_odd: str = "cos"
    value_injection: str = "pre"
    zero_masked_coverage: bool = False

    def enabled(self) -> dict[str, bool]:
        return {a: getattr(self, f"phi_{a}") for a in AUGMENTATIONS}

    def head_assignment(self) -> list[str]:
        if self.heads.strip():
            names = [h.strip().lower() for h in self.heads.split(",")]
        else:
            names = [a for a in AUGMENTATIONS if self.enabled()[a]]
            names = (names + ["none"] * self.n_heads)[: self.n_heads]
        return names

    def validate(self) -> None:
        if self.d < 1 or self.n_heads < 1 or self.d < self.n_heads:
            raise ConfigError(f"need d >= n_heads >= 1, got d={self.d}, n_heads={self.n_heads}")
        if self.news_heads < 1 or self.d < self.news_heads:
            raise ConfigError(f"need d >= news_heads >= 1, got news_heads={self.news_heads}")
        if self.num_layers < 1:
            raise ConfigError("num_layers must be >= 1")
        if self.max_len < 2:
            raise ConfigError("max_len must be >= 2")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.word_position_scale < 0:
            raise ConfigError("word_position_scale must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must be in [0, 1], got {self.eta}")
        if self.freq <= 0 or self.beta <= 0:
            raise ConfigError("freq and beta must be positive")
        if self.circle_odd not in ("cos", "sin"):
            raise ConfigError(f"circle_odd must be 'cos' or 'sin', got {self.circle_odd!r}")
        if self.value_injection not in ("pre", "post"):
            raise ConfigError(f"value_injection must be 'pre' or 'post', got {self.value_injection!r}")
        assignment = self.head_assignment()
        if len(assignment) != self.n_heads:
            raise ConfigError(f"heads lists {len(assignment)} entries for n_heads={self.n_heads}")
        enabled = self.enabled()
        for name in assignment:
            if name == "none":
                continue
            if name not in enabled:
                raise ConfigError(f"unknown augmentation {name!r} in heads")
            if not enabled[name]:
                raise ConfigError(f"head assigned to disabled augmentation {name!r}")
        used = [h for h in assignment if h != "none"]
        if len(used) != len(set(used)):
            raise ConfigError("each augmentation may be assigned to at most one head")


@dataclass
class TrainConfig:
    rho: float = 0.2
    gamma: float = 0.3
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 20
    seed: int = 0
    # stop gradients through the coverage target of the diversity term
    detach_coverage: bool = True

    def validate(self) -> None:
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError(f"rho must be in (0, 1], got {self.rho}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.batch_size < 1 or self.epochs < 0 or self.lr <= 0:
            raise ConfigError("batch_size >= 1, epochs >= 0 and lr > 0 required")


@dataclass
class EvalConfig:
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    ndcg_ks: tuple[int, ...] = (5, 10)
    div_ks: tuple[int, ...] = (10, 20, 50)
    alpha: float = 1.0
    similarity: str = "embedding"
    ranking: str = "candidates"
    split: str = "test"
    batch_size: int = 256
    head_sweep: tuple[int, ...] = (8, 10, 20, 25)

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("eval.seeds must not be empty")
        if self.similarity not in ("embedding", "category"):
            raise ConfigError(f"similarity must be 'embedding' or 'category', got {self.similarity!r}")
        if self.ranking not in ("candidates", "catalog"):
            raise ConfigError(f"ranking must be 'candidates' or 'catalog', got {self.ranking!r}")
        if self.split not in ("test", "val"):
            raise ConfigError(f"split must be 'test' or 'val', got {self.split!r}")
        if any(k < 1 for k in self.ndcg_ks) or any(k < 2 for k in self.div_ks):
            raise ConfigError("ndcg_ks must be >= 1 and div_ks >= 2")


@dataclass
class DataConfig:
    news: str = "data/news.tsv"
    behaviors: str = "data/behaviors.tsv"


@dataclass
class SynthConfig:
    num_users: int = 500
    num_news: int = 200
    num_topics: int = 8
    vocab_size: int = 400
    stickiness: float = 0.8
    min_clicks: int = 8
    max_clicks: int = 40
    seed: int = 7


@dataclass
class RunSection:
    out: str = "runs/default"
    threads: int = 1


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    run: RunSection = field(default_factory=RunSection)

    def validate(self) -> "RunConfig":
        self.model.validate()
        self.train.validate()
        self.eval.validate()
        if self.run.threads < 1:
            raise ConfigError("run.threads must be >= 1")
        return self

    def as_flat(self) -> dict[str, str]:
        out = {}
        for section in SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                out[f"{section}.{f.name}"] = format_value(getattr(obj, f.name))
        return out

    def to_ini(self) -> str:
        lines = []
        for section in SECTIONS:
            obj = getattr(self, section)
            lines.append(f"[{section}]")
            for f in dataclasses.fields(obj):
                lines.append(f"{f.name} = {format_value(getattr(obj, f.name))}")
            lines.append("")
        return "\n".join(lines)


SECTIONS = ("data", "synth", "model", "train", "eval", "run")


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _coerce(raw: str, typ, key: str):
    raw = raw.strip()
    origin = typing.get_origin(typ)
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if origin is tuple:
            (inner, *_rest) = typing.get_args(typ)
            return tuple(_coerce(part, inner, key) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {getattr(typ, '__name__', typ)}") from exc
    raise ConfigError(f"{key}: unsupported type {typ}")


def _set(cfg: RunConfig, dotted: str, raw: str) -> None:
    section, _, name = dotted.partition(".")
    if section not in SECTIONS or not name:
        raise ConfigError(f"unknown config key {dotted!r}")
    obj = getattr(cfg, section)
    hints = typing.get_type_hints(type(obj))
    if name not in hints:
        raise ConfigError(f"unknown config key {dotted!r}")
    setattr(obj, name, _coerce(raw, hints[name], dotted))


def load_config(path=None, overrides: typing.Iterable[str] = ()) -> RunConfig:
    """Build a validated :class:`RunConfig` from an optional INI file plus overrides."""
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        if parser.defaults():
            raise ConfigError("keys outside a section are not allowed")
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for name, raw in parser.items(section):
                _set(cfg, f"{section}.{name}", raw)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        _set(cfg, key.strip(), raw)
    return cfg.validate()


def replace_section(cfg: RunConfig, **sections) -> RunConfig:
    """Copy of ``cfg`` with whole sections or ``section={field: value}`` patches applied."""
    new = dataclasses.replace(cfg)
    for section in SECTIONS:
        setattr(new, section, dataclasses.replace(getattr(cfg, section)))
    for section, patch in sections.items():
        obj = getattr(new, section)
        setattr(new, section, dataclasses.replace(obj, **patch))
    return new
