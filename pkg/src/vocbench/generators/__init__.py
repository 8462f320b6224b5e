"""Six mel-to-waveform generators behind one build/forward interface."""

from __future__ import annotations

import torch
from torch import nn

from ..serialization import config_hash as _config_hash
from ..serialization import config_to_text as _config_to_text
from ..serialization import text_to_mapping
from .configs import (
    CONFIG_CLASSES,
    GeneratorConfig,
    GeneratorKind,
    HifiGanV2Config,
    LATENT_KINDS,
    MelGanConfig,
    ProposedConfig,
    PwganConfig,
    UmganConfig,
    VocGanConfig,
    config_from_mapping,
)
from .export import export_weights, load_weights, read_records, write_records
from .hifigan import HifiGanV2Generator
from .melgan import MelGanGenerator
from .presets import default_config, smoke_config, tiny_config
from .proposed import ProposedGenerator
from .pwgan import PwganGenerator
from .receptive import probe_receptive_field_empirical, receptive_field
from .umgan import UmganGenerator
from .vocgan import VocGanGenerator

_BUILDERS = {
    GeneratorKind.HIFIGAN_V2: HifiGanV2Generator,
    GeneratorKind.MELGAN: MelGanGenerator,
    GeneratorKind.PWGAN: PwganGenerator,
    GeneratorKind.UMGAN: UmganGenerator,
    GeneratorKind.VOCGAN: VocGanGenerator,
    GeneratorKind.PROPOSED: ProposedGenerator,
}


def build_generator(config: GeneratorConfig, seed: int = 0) -> nn.Module:
    """Instantiate a generator with deterministic, seeded initialization."""
    rng = torch.Generator()
    rng.manual_seed(seed)
    return _BUILDERS[config.kind](config, rng)


def count_parameters(module: nn.Module) -> int:
    """Total trainable scalar parameters."""
    return sum(p.numel() for p in module.parameters() if p.requires_grad)


def generator_receptive_field(config: GeneratorConfig) -> int:
    """Analytic receptive field of the full mel-to-waveform path, in samples."""
    return receptive_field(config.rf_plan())


def config_to_text(config: GeneratorConfig) -> str:
    """Serialize as ``key: value`` text with the ``kind`` discriminator."""
    return _config_to_text(config, kind=config.kind.value)


def config_from_text(text: str) -> GeneratorConfig:
    return config_from_mapping(text_to_mapping(text))


def generator_config_hash(config: GeneratorConfig) -> str:
    return _config_hash(config, kind=config.kind.value)


def draw_noise(
    config: GeneratorConfig,
    batch: int,
    frames: int,
    rng: torch.Generator,
    device: torch.device | str = "cpu",
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor | None:
    """Standard-normal latent matching the kind's shape; None for mel-only."""
    if config.kind not in LATENT_KINDS:
        return None
    if config.kind is GeneratorKind.PWGAN:
        shape = (batch, 1, frames * 256)
    else:
        shape = (batch, config.noise_dim, frames)
    return torch.randn(shape, generator=rng, dtype=dtype).to(device)
