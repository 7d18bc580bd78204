"""Experiment configuration: INI files with one section per pipeline stage.

Every key is checked against the section's field list, so a typo fails fast
with its ``section.key`` path instead of being silently ignored.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import os
import typing
from dataclasses import dataclass, field

TARGET_MODELS = ("gcn", "sage", "node2vec", "deepwalk")
ATTACKS = ("membership", "reconstruction", "attribute")
MEMBERSHIP_MODES = ("confidence", "shadow", "whitebox")


class ConfigError(ValueError):
    pass


def derive_seed(master, component):
    """Per-component seed: first 4 bytes of sha256("<master>/<component>"), big-endian.

    Components draw from independent streams, so enabling one more attack
    leaves the randomness of every other stage untouched.
    """
    digest = hashlib.sha256(f"{int(master)}/{component}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass
class ExperimentSection:
    name: str = "audit"
    seeds: tuple[int, ...] = (0,)
    attacks: tuple[str, ...] = ("membership",)
    out: str = "runs/audit"


@dataclass
class DatasetSection:
    source: str = "sbm"
    directory: str = ""
    blocks: tuple[int, ...] = (200, 200)
    p_intra: float = 0.05
    p_inter: float = 0.01
    feature_dim: int = 200
    class_signal: float = 1.0
    attribute_correlation: float = 0.9
    max_nodes: int = 4000
    train_size: int = 40
    val_size: int = 0
    test_size: int = 160
    stratified: bool = False


@dataclass
class TargetSection:
    model: str = "gcn"
    num_layers: int = 2
    hidden_dim: int = 0
    embedding_layer: int = 1
    dropout: float = 0.0
    epochs: int = 200
    lr: float = 0.01
    optimizer: str = "adam"
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    dim: int = 128
    negatives: int = 5
    walk_epochs: int = 1
    p: float = 1.0
    q: float = 1.0
    walk_lr: float = 0.025
    batch_size: int = 8192

    @property
    def is_gnn(self):
        return self.model in ("gcn", "sage")


@dataclass
class MembershipSection:
    modes: tuple[str, ...] = ("confidence",)
    threshold: str = "sweep"
    eval_size: int = 0
    shadow_classifier: str = "mlp"
    shadow_train_size: int = 0
    anchors: int = 10
    whitebox_hidden_dim: int = 16
    whitebox_epochs: int = 200


@dataclass
class ReconstructionSection:
    decoder: str = "inner_product"
    loss: str = "weighted_bce"
    release: str = "encoder"
    aux_fraction: float = 0.3
    target_fraction: float = 0.6
    hidden_dim: int = 32
    emb_dim: int = 16
    epochs: int = 200
    lr: float = 0.01
    threshold_policy: str = "fixed"
    threshold: float = 0.5
    density: float = 0.0


@dataclass
class AttributeSection:
    classifier: str = "mlp"
    aux_fraction: float = 0.3
    target_fraction: float = 0.5
    hidden_dim: int = 64
    epochs: int = 200
    lr: float = 0.01
    null_shuffles: int = 0


SECTIONS = {
    "experiment": ExperimentSection,
    "dataset": DatasetSection,
    "target": TargetSection,
    "membership": MembershipSection,
    "reconstruction": ReconstructionSection,
    "attribute": AttributeSection,
}


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    target: TargetSection = field(default_factory=TargetSection)
    membership: MembershipSection = field(default_factory=MembershipSection)
    reconstruction: ReconstructionSection = field(default_factory=ReconstructionSection)
    attribute: AttributeSection = field(default_factory=AttributeSection)

    @property
    def seeds(self):
        return self.experiment.seeds

    @property
    def out(self):
        return self.experiment.out

    def to_mapping(self):
        """Nested ``{section: {key: text}}`` that :func:`from_mapping` parses back."""
        return {name: {f.name: _format(getattr(getattr(self, name), f.name))
                       for f in dataclasses.fields(SECTIONS[name])}
                for name in SECTIONS}

    def to_ini(self):
        parser = configparser.ConfigParser()
        parser.read_dict(self.to_mapping())
        lines = []
        for section in parser.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in parser[section].items())
            lines.append("")
        return "\n".join(lines)

    def replace(self, section, **changes):
        """Copy with fields of one section changed (values are re-validated)."""
        new = dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})
        validate(new)
        return new


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return " ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_BOOLS = {"true": True, "yes": True, "1": True, "on": True,
          "false": False, "no": False, "0": False, "off": False}


def _parse(text, kind, path):
    text = text.strip()
    try:
        if kind is bool:
            if text.lower() not in _BOOLS:
                raise ValueError(f"expected true/false, got {text!r}")
            return _BOOLS[text.lower()]
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is str:
            return text
        if typing.get_origin(kind) is tuple:
            item = typing.get_args(kind)[0]
            parts = text.replace(",", " ").split()
            return tuple(_parse(p, item, path) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}: unsupported field type {kind}")


def from_mapping(mapping, base_dir="."):
    """Build and validate a config from ``{section: {key: text}}``."""
    sections = {}
    for name, values in mapping.items():
        if name == configparser.DEFAULTSECT:
            if values:
                raise ConfigError(f"{name}: a DEFAULT section is not supported")
            continue
        if name not in SECTIONS:
            raise ConfigError(f"{name}: unknown section (expected one of {', '.join(SECTIONS)})")
        cls = SECTIONS[name]
        hints = typing.get_type_hints(cls)
        kwargs = {}
        for key, text in values.items():
            if key not in hints:
                raise ConfigError(f"{name}.{key}: unknown key")
            kwargs[key] = _parse(str(text), hints[key], f"{name}.{key}")
        sections[name] = cls(**kwargs)
    cfg = ExperimentConfig(**sections)
    if cfg.dataset.directory and not os.path.isabs(cfg.dataset.directory):
        cfg.dataset.directory = os.path.normpath(os.path.join(base_dir, cfg.dataset.directory))
    validate(cfg)
    return cfg


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    mapping = {s: dict(parser[s]) for s in parser.sections()}
    return from_mapping(mapping, base_dir=os.path.dirname(os.path.abspath(path)))


def _check(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _fraction(value, path):
    _check(0.0 < value < 1.0, path, f"must lie in (0, 1), got {value}")


def validate(cfg):
    e, d, t, m, r, a = (cfg.experiment, cfg.dataset, cfg.target, cfg.membership,
                        cfg.reconstruction, cfg.attribute)
    _check(len(e.seeds) > 0, "experiment.seeds", "needs at least one seed")
    _check(len(set(e.seeds)) == len(e.seeds), "experiment.seeds", "seeds must be distinct")
    _check(min(e.seeds) >= 0, "experiment.seeds", "seeds must be non-negative")
    for attack in e.attacks:
        _check(attack in ATTACKS, "experiment.attacks", f"unknown attack {attack!r}; expected {ATTACKS}")

    _check(d.source in ("sbm", "files"), "dataset.source", "must be 'sbm' or 'files'")
    if d.source == "files":
        _check(bool(d.directory), "dataset.directory", "required when source = files")
        _check(os.path.isdir(d.directory), "dataset.directory", f"{d.directory} does not exist")
        for name in ("edges.txt", "features.csv"):
            path = os.path.join(d.directory, name)
            _check(os.path.exists(path), "dataset.directory", f"missing {path}")
    else:
        _check(len(d.blocks) >= 2 and min(d.blocks) > 0, "dataset.blocks", "need two or more non-empty blocks")
        _check(0.0 <= d.p_inter < d.p_intra <= 1.0, "dataset.p_inter", "need 0 <= p_inter < p_intra <= 1")
        _check(d.feature_dim >= len(d.blocks), "dataset.feature_dim", "must be at least the block count")
        _check(0.0 <= d.attribute_correlation <= 1.0, "dataset.attribute_correlation", "must lie in [0, 1]")
    _check(d.max_nodes >= 0, "dataset.max_nodes", "must be >= 0 (0 keeps every node)")
    for key in ("train_size", "val_size", "test_size"):
        _check(getattr(d, key) >= 0, f"dataset.{key}", "must be >= 0")
    _check(d.train_size > 0, "dataset.train_size", "must be positive")

    _check(t.model in TARGET_MODELS, "target.model", f"must be one of {TARGET_MODELS}")
    if t.is_gnn:
        _check(t.num_layers >= 2, "target.num_layers", "must be at least 2")
        _check(1 <= t.embedding_layer < t.num_layers, "target.embedding_layer",
               f"must lie in [1, {t.num_layers - 1}]")
        _check(0.0 <= t.dropout < 1.0, "target.dropout", "must lie in [0, 1)")
        _check(t.optimizer in ("adam", "sgd"), "target.optimizer", "must be 'adam' or 'sgd'")
        _check(t.hidden_dim >= 0, "target.hidden_dim", "must be >= 0 (0 picks the architecture default)")
    else:
        _check(t.p > 0 and t.q > 0, "target.p", "p and q must be positive")
        _check(t.walk_length >= 2, "target.walk_length", "must be at least 2")

    if "membership" in e.attacks:
        _check(t.is_gnn, "experiment.attacks",
               "membership attacks need a gcn or sage target (walk embeddings expose no predictions)")
    for mode in m.modes:
        _check(mode in MEMBERSHIP_MODES, "membership.modes", f"unknown mode {mode!r}; expected {MEMBERSHIP_MODES}")
    if m.threshold != "sweep":
        try:
            tau = float(m.threshold)
        except ValueError:
            raise ConfigError("membership.threshold: must be 'sweep' or a number in [0, 1]") from None
        _check(0.0 <= tau <= 1.0, "membership.threshold", "must lie in [0, 1]")
    _check(m.shadow_classifier in ("mlp", "logreg"), "membership.shadow_classifier", "must be 'mlp' or 'logreg'")
    _check(m.anchors >= 1, "membership.anchors", "must be at least 1")

    _check(r.decoder in ("inner_product", "bilinear"), "reconstruction.decoder",
           "must be 'inner_product' or 'bilinear'")
    _check(r.loss in ("weighted_bce", "squared"), "reconstruction.loss", "must be 'weighted_bce' or 'squared'")
    _check(r.release in ("encoder", "target"), "reconstruction.release", "must be 'encoder' or 'target'")
    _check(r.threshold_policy in ("fixed", "density"), "reconstruction.threshold_policy",
           "must be 'fixed' or 'density'")
    _fraction(r.aux_fraction, "reconstruction.aux_fraction")
    _fraction(r.target_fraction, "reconstruction.target_fraction")
    _check(r.aux_fraction + r.target_fraction <= 1.0 + 1e-12, "reconstruction.target_fraction",
           "aux_fraction + target_fraction exceeds 1")
    _check(0.0 <= r.density < 1.0, "reconstruction.density", "must lie in [0, 1) (0 estimates it from aux)")

    _check(a.classifier in ("mlp", "logreg"), "attribute.classifier", "must be 'mlp' or 'logreg'")
    _fraction(a.aux_fraction, "attribute.aux_fraction")
    _fraction(a.target_fraction, "attribute.target_fraction")
    _check(a.aux_fraction + a.target_fraction <= 1.0 + 1e-12, "attribute.target_fraction",
           "aux_fraction + target_fraction exceeds 1")
    _check(a.null_shuffles >= 0, "attribute.null_shuffles", "must be >= 0")
    return cfg
