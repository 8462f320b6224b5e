"""Declarative configs for the six generator architectures.

Every config validates the shared contract (total upsampling equals the
256-sample hop; a noise latent exists only for the two latent-driven
kinds) and knows how to describe its own receptive-field plan.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import ClassVar

from .receptive import Conv, Parallel, TConv, Upsample

HOP_SIZE = 256


class GeneratorKind(str, enum.Enum):
    HIFIGAN_V2 = "hifigan_v2"
    MELGAN = "melgan"
    PWGAN = "pwgan"
    UMGAN = "umgan"
    VOCGAN = "vocgan"
    PROPOSED = "proposed"


LATENT_KINDS = (GeneratorKind.PWGAN, GeneratorKind.PROPOSED)


def _check_common(cfg) -> None:
    if math.prod(cfg.upsample_rates) != HOP_SIZE:
        raise ValueError(
            f"upsample rates {cfg.upsample_rates} multiply to "
            f"{math.prod(cfg.upsample_rates)}, need {HOP_SIZE}"
        )
    wants_noise = cfg.kind in LATENT_KINDS
    if wants_noise != (cfg.noise_dim > 0):
        raise ValueError(
            f"{cfg.kind.value}: noise_dim must be positive exactly for latent kinds, "
            f"got {cfg.noise_dim}"
        )
    if cfg.init_std is not None and cfg.init_std <= 0:
        raise ValueError("init_std must be positive")


@dataclass(frozen=True)
class HifiGanV2Config:
    """Transposed-convolution upsampling with multi-kernel residual fusion."""

    kind: ClassVar[GeneratorKind] = GeneratorKind.HIFIGAN_V2

    in_mels: int = 80
    initial_channels: int = 128
    upsample_rates: tuple[int, ...] = (8, 8, 2, 2)
    upsample_kernels: tuple[int, ...] = (16, 16, 4, 4)
    resblock_kernels: tuple[int, ...] = (3, 7, 11)
    resblock_dilations: tuple[tuple[int, ...], ...] = ((1, 3, 5), (1, 3, 5), (1, 3, 5))
    io_kernel: int = 7
    lrelu_slope: float = 0.1
    init_std: float = 0.01
    noise_dim: int = 0

    def __post_init__(self):
        _check_common(self)
        if len(self.upsample_rates) != len(self.upsample_kernels):
            raise ValueError("one upsample kernel per rate required")
        if len(self.resblock_kernels) != len(self.resblock_dilations):
            raise ValueError("one dilation schedule per resblock kernel required")
        if self.initial_channels % (2 ** len(self.upsample_rates)) != 0:
            raise ValueError("initial_channels must survive halving at every stage")

    def rf_plan(self) -> tuple:
        plan: list = [Conv(self.io_kernel)]
        for rate, kernel in zip(self.upsample_rates, self.upsample_kernels):
            plan.append(TConv(kernel, rate))
            branches = []
            for k, dils in zip(self.resblock_kernels, self.resblock_dilations):
                chain = []
                for d in dils:
                    chain += [Conv(k, d), Conv(k, 1)]
                branches.append(tuple(chain))
            plan.append(Parallel(tuple(branches)))
        plan.append(Conv(self.io_kernel))
        return tuple(plan)


@dataclass(frozen=True)
class MelGanConfig:
    """Residual stacks of dilated convolutions between transposed upsamplings."""

    kind: ClassVar[GeneratorKind] = GeneratorKind.MELGAN

    in_mels: int = 80
    ngf: int = 32
    n_residual_layers: int = 3
    upsample_rates: tuple[int, ...] = (8, 8, 2, 2)
    stack_kernel: int = 3
    dilation_base: int = 3
    io_kernel: int = 7
    lrelu_slope: float = 0.2
    init_std: float = 0.01
    noise_dim: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.ngf < 1 or self.n_residual_layers < 1:
            raise ValueError("ngf and n_residual_layers must be >= 1")

    def rf_plan(self) -> tuple:
        plan: list = [Conv(self.io_kernel)]
        for rate in self.upsample_rates:
            plan.append(TConv(2 * rate, rate))
            for j in range(self.n_residual_layers):
                d = self.dilation_base**j
                plan.append(Parallel(((Conv(self.stack_kernel, d), Conv(1)), (Conv(1),))))
        plan.append(Conv(self.io_kernel))
        return tuple(plan)


@dataclass(frozen=True)
class PwganConfig:
    """Non-causal WaveNet over a per-sample noise latent with mel conditioning."""

    kind: ClassVar[GeneratorKind] = GeneratorKind.PWGAN

    in_mels: int = 80
    layers: int = 30
    stacks: int = 3
    residual_channels: int = 64
    gate_channels: int = 128
    skip_channels: int = 64
    kernel_size: int = 3
    upsample_rates: tuple[int, ...] = (4, 4, 4, 4)
    init_std: float | None = None
    noise_dim: int = 1

    def __post_init__(self):
        _check_common(self)
        if self.layers % self.stacks != 0:
            raise ValueError("layers must divide evenly into stacks")
        if self.gate_channels % 2 != 0:
            raise ValueError("gate_channels must be even (split for the gate)")
        if self.noise_dim != 1:
            raise ValueError("the latent is one scalar per output sample")

    def dilation_at(self, layer: int) -> int:
        return 2 ** (layer % (self.layers // self.stacks))

    def rf_plan(self) -> tuple:
        plan: list = [Conv(1)]
        for rate in self.upsample_rates:
            plan += [Upsample(rate), Conv(2 * rate + 1)]
        # widest conditioning route: conditioning joins each block after its
        # dilated conv, so injection at block 1 still traverses the dilated
        # convs of blocks 2..L
        plan += [Conv(self.kernel_size, self.dilation_at(i)) for i in range(1, self.layers)]
        return tuple(plan)


@dataclass(frozen=True)
class UmganConfig:
    """MelGAN-shaped stack whose residual blocks use gated activation units."""

    kind: ClassVar[GeneratorKind] = GeneratorKind.UMGAN

    in_mels: int = 80
    channels: int = 768
    blocks_per_stage: int = 4
    upsample_rates: tuple[int, ...] = (8, 8, 2, 2)
    stack_kernel: int = 3
    dilation_base: int = 3
    io_kernel: int = 7
    lrelu_slope: float = 0.2
    init_std: float = 0.01
    noise_dim: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.channels < 2 or self.blocks_per_stage < 1:
            raise ValueError("channels must be >= 2 and blocks_per_stage >= 1")

    def rf_plan(self) -> tuple:
        plan: list = [Conv(self.io_kernel)]
        for rate in self.upsample_rates:
            plan.append(TConv(2 * rate, rate))
            for j in range(self.blocks_per_stage):
                d = self.dilation_base**j
                plan.append(Parallel(((Conv(self.stack_kernel, d), Conv(1)), ())))
        plan.append(Conv(self.io_kernel))
        return tuple(plan)


@dataclass(frozen=True)
class VocGanConfig:
    """Long 4x4x2x2x2x2 upsampling with mel conditioning re-injected late."""

    kind: ClassVar[GeneratorKind] = GeneratorKind.VOCGAN

    in_mels: int = 80
    initial_channels: int = 512
    channel_floor: int = 64
    upsample_rates: tuple[int, ...] = (4, 4, 2, 2, 2, 2)
    blocks_per_stage: int = 6
    stack_kernel: int = 3
    dilation_base: int = 3
    io_kernel: int = 7
    aux_stages: int = 4
    lrelu_slope: float = 0.2
    init_std: float = 0.01
    noise_dim: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.aux_stages > len(self.upsample_rates):
            raise ValueError("aux_stages cannot exceed the number of stages")

    def stage_channels(self) -> tuple[int, ...]:
        chans = [self.initial_channels]
        for _ in self.upsample_rates:
            chans.append(max(chans[-1] // 2, self.channel_floor))
        return tuple(chans)

    def rf_plan(self) -> tuple:
        # The mel-input main path dominates every late aux-conditioning path:
        # both share each suffix while the main prefix is strictly wider.
        plan: list = [Conv(self.io_kernel)]
        for rate in self.upsample_rates:
            plan.append(TConv(2 * rate, rate))
            for j in range(self.blocks_per_stage):
                d = self.dilation_base**j
                plan.append(Parallel(((Conv(self.stack_kernel, d), Conv(1)), (Conv(1),))))
        plan.append(Conv(self.io_kernel))
        return tuple(plan)


@dataclass(frozen=True)
class ProposedConfig:
    """Large-kernel group-wise blocks over a noise latent, skips to a postnet.

    Per block: a group-wise convolution with a very large kernel, a 1x1
    channel mixer closed by the residual connection, then a kernel-3
    convolution whose dilation doubles block by block and feeds the skip
    path. Upsampled mel is added to every block input.
    """

    kind: ClassVar[GeneratorKind] = GeneratorKind.PROPOSED

    in_mels: int = 80
    channels: int = 104
    blocks: int = 12
    gw_kernel: int = 357
    gw_groups: int = 104
    dilation_base: int = 2
    up_kernel: int = 3
    upsample_rates: tuple[int, ...] = (8, 8, 2, 2)
    lrelu_slope: float = 0.1
    init_std: float = 0.01
    noise_dim: int = 64

    def __post_init__(self):
        _check_common(self)
        if self.channels % self.gw_groups != 0:
            raise ValueError("gw_groups must divide channels")
        if self.gw_kernel % 2 == 0 or self.up_kernel % 2 == 0:
            raise ValueError("kernels must be odd for symmetric padding")
        if self.blocks < 1:
            raise ValueError("need at least one residual block")

    def dilation_at(self, block: int) -> int:
        return self.dilation_base**block

    def _skip_branches(self, through_block: int) -> tuple:
        branches = []
        for b in range(through_block):
            chain = (Conv(self.gw_kernel), Conv(1)) * (b + 1) + (
                Conv(3, self.dilation_at(b)),
            )
            branches.append(chain)
        return tuple(branches)

    def residual_rf_plan(self, through_block: int | None = None) -> tuple:
        """Plan of the audio-rate residual net alone, up to a given block."""
        b = self.blocks if through_block is None else through_block
        if not 1 <= b <= self.blocks:
            raise ValueError(f"block index must be in 1..{self.blocks}")
        return (Parallel(self._skip_branches(b)), Conv(1))

    def _upsample_plan(self) -> list:
        plan: list = []
        for rate in self.upsample_rates:
            plan += [Upsample(rate), Conv(self.up_kernel)]
        return plan

    def rf_plan(self) -> tuple:
        return tuple(self._upsample_plan()) + self.residual_rf_plan()


GeneratorConfig = (
    HifiGanV2Config
    | MelGanConfig
    | PwganConfig
    | UmganConfig
    | VocGanConfig
    | ProposedConfig
)

CONFIG_CLASSES: dict[GeneratorKind, type] = {
    GeneratorKind.HIFIGAN_V2: HifiGanV2Config,
    GeneratorKind.MELGAN: MelGanConfig,
    GeneratorKind.PWGAN: PwganConfig,
    GeneratorKind.UMGAN: UmganConfig,
    GeneratorKind.VOCGAN: VocGanConfig,
    GeneratorKind.PROPOSED: ProposedConfig,
}


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def config_from_mapping(mapping: dict) -> GeneratorConfig:
    """Build a per-kind config from a plain mapping with a ``kind`` field."""
    data = dict(mapping)
    try:
        kind = GeneratorKind(data.pop("kind"))
    except KeyError:
        raise ValueError("generator config mapping has no 'kind' discriminator") from None
    except ValueError as exc:
        raise ValueError(f"unknown generator kind: {exc}") from None
    cls = CONFIG_CLASSES[kind]
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"{kind.value}: unknown config fields {sorted(unknown)}")
    return cls(**{k: _tuplify(v) for k, v in data.items()})
