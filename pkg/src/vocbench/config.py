"""The single run config consumed by the command-line entry points."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .dsp import MelConfig
from .generators import GeneratorConfig, config_from_mapping
from .generators.configs import HOP_SIZE
from .serialization import config_hash, to_plain
from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus_root: Path
    cache_dir: Path
    checkpoint_dir: Path
    output_dir: Path
    manifest_seed: int = 1234
    split_sizes: tuple[int, int] = (12950, 150)
    eval_seed: int = 777
    mel: MelConfig = field(default_factory=MelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    generator: GeneratorConfig | None = None
    discriminator: str = "default"
    checkpoint_interval: int = 5000
    validate_interval: int = 0
    validation_limit: int | None = None

    def __post_init__(self):
        if self.discriminator not in ("default", "tiny"):
            raise ConfigError("discriminator must be 'default' or 'tiny'")
        if self.mel.hop_size != HOP_SIZE:
            raise ConfigError(
                f"mel hop_size {self.mel.hop_size} breaks the {HOP_SIZE}x upsampling law"
            )
        if self.train.segment_samples % self.mel.hop_size != 0:
            raise ConfigError("segment_samples must be a multiple of hop_size")

    @property
    def stamp(self) -> str:
        """Provenance hash covering the full run config."""
        payload = {
            "manifest_seed": self.manifest_seed,
            "split_sizes": list(self.split_sizes),
            "eval_seed": self.eval_seed,
            "mel": to_plain(self.mel),
            "train": to_plain(self.train),
            "generator": to_plain(self.generator) if self.generator else None,
            "discriminator": self.discriminator,
        }
        return config_hash(payload)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    base = path.parent

    def resolve(key: str) -> Path:
        if key not in raw:
            raise ConfigError(f"{path}: missing required path {key!r}")
        p = Path(raw[key])
        return p if p.is_absolute() else base / p

    try:
        mel = MelConfig(**raw.get("mel", {}))
        train = TrainConfig(**{
            k: tuple(v) if isinstance(v, list) else v
            for k, v in raw.get("train", {}).items()
        })
        generator = config_from_mapping(raw["generator"]) if "generator" in raw else None
        cfg = RunConfig(
            corpus_root=resolve("corpus_root"),
            cache_dir=resolve("cache_dir"),
            checkpoint_dir=resolve("checkpoint_dir"),
            output_dir=resolve("output_dir"),
            manifest_seed=raw.get("manifest_seed", 1234),
            split_sizes=tuple(raw.get("split_sizes", (12950, 150))),
            eval_seed=raw.get("eval_seed", 777),
            mel=mel,
            train=train,
            generator=generator,
            discriminator=raw.get("discriminator", "default"),
            checkpoint_interval=raw.get("checkpoint_interval", 5000),
            validate_interval=raw.get("validate_interval", 0),
            validation_limit=raw.get("validation_limit"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not cfg.corpus_root.exists():
        raise ConfigError(f"{path}: corpus_root {cfg.corpus_root} does not exist")
    return cfg


def pick_device() -> str:
    """Device selection via VOCBENCH_DEVICE, defaulting to CPU."""
    device = os.environ.get("VOCBENCH_DEVICE", "").strip()
    return device or "cpu"
