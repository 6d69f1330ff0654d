"""Run configuration: flat ``section.key = value`` files, defaults,
validation, and the run manifest.

Every known key has a typed default; unknown keys are rejected rather
than silently absorbed, and all problems in a file are reported at once.
A manifest JSON written by a finished run can be loaded in place of a
config file, which reproduces the run exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass



class ConfigError(ValueError):
    """Carries every problem found while loading a configuration."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    if not text.strip():
        return ()
    return tuple(int(v.strip()) for v in text.split(","))


def _parse_mapping(text: str) -> tuple[tuple[int, int], ...]:
    if not text.strip():
        return ()
    pairs = []
    for item in text.split(","):
        src, sep, dst = item.strip().partition(":")
        if sep != ":":
            raise ValueError(f"expected src:dst pairs, got {item!r}")
        pairs.append((int(src), int(dst)))
    return tuple(pairs)


_PARSERS = {
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "str": str,
    "int_list": _parse_int_list,
    "mapping": _parse_mapping,
}

# key -> (type name, default). Defaults are the flagship desk experiment:
# 4 well-separated 16-d blob classes under 80% symmetric noise.
KEY_SPECS: dict[str, tuple[str, object]] = {
    "dataset.kind": ("str", "blobs"),
    "dataset.path": ("str", ""),
    "dataset.test_path": ("str", ""),
    "dataset.num_classes": ("int", 4),
    "dataset.per_class": ("int", 1000),
    "dataset.test_per_class": ("int", 250),
    "dataset.dim": ("int", 16),
    "dataset.separation": ("float", 9.0),
    "dataset.noise_sigma": ("float", 2.25),
    "noise.family": ("str", "symmetric"),
    "noise.eta": ("float", 0.8),
    "noise.mapping": ("mapping", ()),
    "net.hidden": ("int_list", (64, 64)),
    "opt.lr": ("float", 0.02),
    "opt.momentum": ("float", 0.9),
    "opt.weight_decay": ("float", 5e-4),
    "sched.total_epochs": ("int", 60),
    "sched.warmup_epochs": ("int", 5),
    "sched.batch_size": ("int", 64),
    "sched.lr_decay_epoch": ("int", 0),
    "select.tau_c": ("float", 0.5),
    "reco.enabled": ("bool", True),
    "reco.epoch": ("int_list", (30,)),
    "reco.tau_ps": ("float", 0.8),
    "loss.lambda_u": ("float", 0.5),
    "loss.lambda_r": ("float", 1.0),
    "mix.alpha": ("float", 4.0),
    "mix.fold_lambda": ("bool", True),
    "aug.weak_sigma": ("float", 0.05),
    "aug.strong_sigma": ("float", 0.2),
    "aug.mask_prob": ("float", 0.2),
    "aug.strong_enabled": ("bool", True),
    "train.method": ("str", "full"),
    "run.seed": ("int", 1),
    "run.out": ("str", "runs/out"),
    "run.checkpoint_every": ("int", 0),
    "run.record_timing": ("bool", False),
    "run.sweep_parallel": ("bool", False),
    "dump.losses": ("bool", False),
    "dump.division": ("bool", False),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully materialized run configuration (every key has a value)."""

    dataset_kind: str
    dataset_path: str
    dataset_test_path: str
    num_classes: int
    per_class: int
    test_per_class: int
    dim: int
    separation: float
    noise_sigma: float
    noise_family: str
    noise_eta: float
    noise_mapping: tuple[tuple[int, int], ...]
    hidden: tuple[int, ...]
    lr: float
    momentum: float
    weight_decay: float
    total_epochs: int
    warmup_epochs: int
    batch_size: int
    lr_decay_epoch: int
    tau_c: float
    reco_enabled: bool
    reco_epochs: tuple[int, ...]
    reco_tau_ps: float
    lambda_u: float
    lambda_r: float
    mix_alpha: float
    fold_lambda: bool
    aug_weak_sigma: float
    aug_strong_sigma: float
    aug_mask_prob: float
    aug_strong_enabled: bool
    method: str
    seed: int
    out: str
    checkpoint_every: int
    record_timing: bool
    sweep_parallel: bool
    dump_losses: bool
    dump_division: bool

    def widths(self) -> tuple[int, ...]:
        return (self.dim, *self.hidden, self.num_classes)

    def to_flat(self) -> dict[str, object]:
        """The resolved flat key -> value map (manifest content)."""
        return {
            "dataset.kind": self.dataset_kind,
            "dataset.path": self.dataset_path,
            "dataset.test_path": self.dataset_test_path,
            "dataset.num_classes": self.num_classes,
            "dataset.per_class": self.per_class,
            "dataset.test_per_class": self.test_per_class,
            "dataset.dim": self.dim,
            "dataset.separation": self.separation,
            "dataset.noise_sigma": self.noise_sigma,
            "noise.family": self.noise_family,
            "noise.eta": self.noise_eta,
            "noise.mapping": list(list(p) for p in self.noise_mapping),
            "net.hidden": list(self.hidden),
            "opt.lr": self.lr,
            "opt.momentum": self.momentum,
            "opt.weight_decay": self.weight_decay,
            "sched.total_epochs": self.total_epochs,
            "sched.warmup_epochs": self.warmup_epochs,
            "sched.batch_size": self.batch_size,
            "sched.lr_decay_epoch": self.lr_decay_epoch,
            "select.tau_c": self.tau_c,
            "reco.enabled": self.reco_enabled,
            "reco.epoch": list(self.reco_epochs),
            "reco.tau_ps": self.reco_tau_ps,
            "loss.lambda_u": self.lambda_u,
            "loss.lambda_r": self.lambda_r,
            "mix.alpha": self.mix_alpha,
            "mix.fold_lambda": self.fold_lambda,
            "aug.weak_sigma": self.aug_weak_sigma,
            "aug.strong_sigma": self.aug_strong_sigma,
            "aug.mask_prob": self.aug_mask_prob,
            "aug.strong_enabled": self.aug_strong_enabled,
            "train.method": self.method,
            "run.seed": self.seed,
            "run.out": self.out,
            "run.checkpoint_every": self.checkpoint_every,
            "run.record_timing": self.record_timing,
            "run.sweep_parallel": self.sweep_parallel,
            "dump.losses": self.dump_losses,
            "dump.division": self.dump_division,
        }

    def replace_keys(self, overrides: dict[str, str]) -> "RunConfig":
        """New config with flat keys overridden; validated once at the end."""
        values = {k: _to_text(v) for k, v in self.to_flat().items()}
        unknown = [k for k in overrides if k not in values]
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
        values.update(overrides)
        return build_config(values)

    def replace_key(self, key: str, raw_value: str) -> "RunConfig":
        return self.replace_keys({key: raw_value})


def _to_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        parts = []
        for item in value:
            if isinstance(item, (list, tuple)):
                parts.append(f"{item[0]}:{item[1]}")
            else:
                parts.append(str(item))
        return ",".join(parts)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_flat_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    values: dict[str, str] = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, eq, raw = stripped.partition("=")
        if not eq:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key = key.strip()
        raw = raw.split("#", 1)[0].strip()
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        values[key] = raw
    if problems:
        raise ConfigError(problems)
    return values


def build_config(raw_values: dict[str, str]) -> RunConfig:
    """Convert, default-fill, and validate a flat string map."""
    problems: list[str] = []
    for key in raw_values:
        if key not in KEY_SPECS:
            problems.append(f"unknown config key {key!r}")
    typed: dict[str, object] = {}
    for key, (type_name, default) in KEY_SPECS.items():
        if key in raw_values:
            try:
                typed[key] = _PARSERS[type_name](raw_values[key])
            except ValueError as exc:
                problems.append(f"{key}: {exc}")
                typed[key] = default
        else:
            typed[key] = default

    cfg = RunConfig(
        dataset_kind=typed["dataset.kind"],
        dataset_path=typed["dataset.path"],
        dataset_test_path=typed["dataset.test_path"],
        num_classes=typed["dataset.num_classes"],
        per_class=typed["dataset.per_class"],
        test_per_class=typed["dataset.test_per_class"],
        dim=typed["dataset.dim"],
        separation=typed["dataset.separation"],
        noise_sigma=typed["dataset.noise_sigma"],
        noise_family=typed["noise.family"],
        noise_eta=typed["noise.eta"],
        noise_mapping=typed["noise.mapping"],
        hidden=typed["net.hidden"],
        lr=typed["opt.lr"],
        momentum=typed["opt.momentum"],
        weight_decay=typed["opt.weight_decay"],
        total_epochs=typed["sched.total_epochs"],
        warmup_epochs=typed["sched.warmup_epochs"],
        batch_size=typed["sched.batch_size"],
        lr_decay_epoch=typed["sched.lr_decay_epoch"],
        tau_c=typed["select.tau_c"],
        reco_enabled=typed["reco.enabled"],
        reco_epochs=typed["reco.epoch"],
        reco_tau_ps=typed["reco.tau_ps"],
        lambda_u=typed["loss.lambda_u"],
        lambda_r=typed["loss.lambda_r"],
        mix_alpha=typed["mix.alpha"],
        fold_lambda=typed["mix.fold_lambda"],
        aug_weak_sigma=typed["aug.weak_sigma"],
        aug_strong_sigma=typed["aug.strong_sigma"],
        aug_mask_prob=typed["aug.mask_prob"],
        aug_strong_enabled=typed["aug.strong_enabled"],
        method=typed["train.method"],
        seed=typed["run.seed"],
        out=typed["run.out"],
        checkpoint_every=typed["run.checkpoint_every"],
        record_timing=typed["run.record_timing"],
        sweep_parallel=typed["run.sweep_parallel"],
        dump_losses=typed["dump.losses"],
        dump_division=typed["dump.division"],
    )
    problems.extend(validate_config(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def validate_config(cfg: RunConfig) -> list[str]:
    """Every range and cross-field constraint, collected rather than raised."""
    p: list[str] = []
    if cfg.dataset_kind not in ("blobs", "csv"):
        p.append(f"dataset.kind must be blobs or csv, got {cfg.dataset_kind!r}")
    if cfg.dataset_kind == "csv" and not cfg.dataset_path:
        p.append("dataset.path is required when dataset.kind = csv")
    if cfg.dataset_kind == "blobs":
        if cfg.num_classes < 2:
            p.append("dataset.num_classes must be at least 2")
        if cfg.per_class < 1:
            p.append("dataset.per_class must be positive")
        if cfg.test_per_class < 1:
            p.append("dataset.test_per_class must be positive")
        if cfg.dim < 1:
            p.append("dataset.dim must be positive")
        if cfg.separation <= 0:
            p.append("dataset.separation must be positive")
        if cfg.noise_sigma < 0:
            p.append("dataset.noise_sigma must be non-negative")
    if cfg.noise_family not in ("symmetric", "asymmetric"):
        p.append(f"noise.family must be symmetric or asymmetric, got {cfg.noise_family!r}")
    if not 0.0 <= cfg.noise_eta <= 1.0:
        p.append(f"noise.eta must be in [0, 1], got {cfg.noise_eta}")
    if cfg.noise_family == "asymmetric":
        sources = sorted(src for src, _ in cfg.noise_mapping)
        if sources != list(range(cfg.num_classes)):
            p.append("noise.mapping must map every class exactly once")
        elif any(
            not 0 <= dst < cfg.num_classes for _, dst in cfg.noise_mapping
        ):
            p.append("noise.mapping targets must be valid class indices")
    if not cfg.hidden or any(h < 1 for h in cfg.hidden):
        p.append("net.hidden must list positive layer widths")
    if cfg.lr <= 0:
        p.append("opt.lr must be positive")
    if not 0.0 <= cfg.momentum < 1.0:
        p.append("opt.momentum must be in [0, 1)")
    if cfg.weight_decay < 0:
        p.append("opt.weight_decay must be non-negative")
    if cfg.total_epochs < 1:
        p.append("sched.total_epochs must be positive")
    if cfg.warmup_epochs < 0 or cfg.warmup_epochs > cfg.total_epochs:
        p.append("sched.warmup_epochs must be in [0, total_epochs]")
    if cfg.batch_size < 1:
        p.append("sched.batch_size must be positive")
    if cfg.lr_decay_epoch < 0 or cfg.lr_decay_epoch > cfg.total_epochs:
        p.append("sched.lr_decay_epoch must be 0 (off) or within the schedule")
    if not 0.0 <= cfg.tau_c <= 1.0:
        p.append(f"select.tau_c must be in [0, 1], got {cfg.tau_c}")
    if cfg.reco_enabled and cfg.method == "full":
        if not cfg.reco_epochs:
            p.append("reco.epoch must list at least one epoch when reco is enabled")
        elif list(cfg.reco_epochs) != sorted(set(cfg.reco_epochs)):
            p.append("reco.epoch entries must be strictly increasing")
        elif not all(
            cfg.warmup_epochs < e < cfg.total_epochs for e in cfg.reco_epochs
        ):
            p.append(
                "every reco.epoch must satisfy warmup_epochs < epoch < total_epochs"
            )
    if not 0.0 <= cfg.reco_tau_ps <= 1.0:
        p.append(f"reco.tau_ps must be in [0, 1], got {cfg.reco_tau_ps}")
    if cfg.lambda_u < 0:
        p.append("loss.lambda_u must be non-negative")
    if cfg.lambda_r < 0:
        p.append("loss.lambda_r must be non-negative")
    if cfg.mix_alpha <= 0:
        p.append("mix.alpha must be positive")
    if cfg.aug_weak_sigma < 0 or cfg.aug_weak_sigma > cfg.aug_strong_sigma:
        p.append("need 0 <= aug.weak_sigma <= aug.strong_sigma")
    if not 0.0 <= cfg.aug_mask_prob < 1.0:
        p.append("aug.mask_prob must be in [0, 1)")
    if cfg.method not in ("full", "plain"):
        p.append(f"train.method must be full or plain, got {cfg.method!r}")
    if cfg.checkpoint_every < 0:
        p.append("run.checkpoint_every must be non-negative")
    return p


def load_config(path) -> RunConfig:
    """Load a flat config file, or a manifest JSON's resolved config."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        manifest = json.loads(text)
        if "config" not in manifest:
            raise ConfigError(["manifest JSON has no 'config' section"])
        raw = {k: _to_text(v) for k, v in manifest["config"].items()}
        return build_config(raw)
    return build_config(parse_flat_text(text))


def default_config(**overrides) -> RunConfig:
    """Defaults with flat-key overrides given as Python values."""
    raw = {k: _to_text(v) for k, v in overrides.items()}
    return build_config(raw)
