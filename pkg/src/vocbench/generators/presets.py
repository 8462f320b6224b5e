"""Default (paper-scale) and tiny (test/CI-scale) configs per kind.

The defaults reproduce the published parameter-count targets; the tiny
variants keep every structural trait (upsampling product, block layout,
latent usage) while staying small enough for CPU smoke tests.
"""

from __future__ import annotations

from .configs import (
    GeneratorConfig,
    GeneratorKind,
    HifiGanV2Config,
    MelGanConfig,
    ProposedConfig,
    PwganConfig,
    UmganConfig,
    VocGanConfig,
)

_DEFAULTS = {
    GeneratorKind.HIFIGAN_V2: HifiGanV2Config,
    GeneratorKind.MELGAN: MelGanConfig,
    GeneratorKind.PWGAN: PwganConfig,
    GeneratorKind.UMGAN: UmganConfig,
    GeneratorKind.VOCGAN: VocGanConfig,
    GeneratorKind.PROPOSED: ProposedConfig,
}

_TINY = {
    GeneratorKind.HIFIGAN_V2: lambda: HifiGanV2Config(
        initial_channels=16,
        resblock_kernels=(3,),
        resblock_dilations=((1, 2),),
    ),
    GeneratorKind.MELGAN: lambda: MelGanConfig(ngf=1, n_residual_layers=2),
    GeneratorKind.PWGAN: lambda: PwganConfig(
        layers=6,
        stacks=2,
        residual_channels=6,
        gate_channels=12,
        skip_channels=6,
    ),
    GeneratorKind.UMGAN: lambda: UmganConfig(channels=12, blocks_per_stage=1),
    GeneratorKind.VOCGAN: lambda: VocGanConfig(
        initial_channels=16,
        channel_floor=4,
        blocks_per_stage=1,
    ),
    GeneratorKind.PROPOSED: lambda: ProposedConfig(
        channels=8,
        blocks=3,
        gw_kernel=15,
        gw_groups=8,
        noise_dim=4,
    ),
}


def default_config(kind: GeneratorKind | str) -> GeneratorConfig:
    return _DEFAULTS[GeneratorKind(kind)]()


def tiny_config(kind: GeneratorKind | str) -> GeneratorConfig:
    return _TINY[GeneratorKind(kind)]()


def smoke_config(kind: GeneratorKind | str) -> GeneratorConfig:
    """Tiny-config variants sized so a 500-step single-batch overfit bites.

    MelGAN needs more tail width than the gradient-check budget allows,
    and PWGAN needs a mid-range init temperature: fan-in scaling converges
    before step 10 while 0.01 never lifts the output past the mel floor.
    """
    kind = GeneratorKind(kind)
    if kind is GeneratorKind.MELGAN:
        return MelGanConfig(ngf=2, n_residual_layers=2)
    if kind is GeneratorKind.PWGAN:
        return PwganConfig(
            layers=6,
            stacks=2,
            residual_channels=6,
            gate_channels=12,
            skip_channels=6,
            init_std=0.08,
        )
    return tiny_config(kind)
