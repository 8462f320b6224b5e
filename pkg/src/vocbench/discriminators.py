"""The shared multi-resolution discriminating framework.

Two branches examine nothing but the final waveform: a multi-period
discriminator folding the signal into (length/p, p) views for five prime
periods, and a multi-scale discriminator running grouped strided 1-D
convolutions over the raw, 2x-pooled and 4x-pooled signal. The combined
output is always ordered periods first, then scales, because the
feature-matching loss depends on a stable sub-discriminator order.

The channel/stride layout ships in ``data/discriminator_v2.yaml``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import torch
import torch.nn.functional as F
import yaml
from torch import nn
from torch.nn.utils.parametrizations import spectral_norm, weight_norm

from .generators.common import seeded_init

DEFAULT_LAYOUT_RESOURCE = "data/discriminator_v2.yaml"


@dataclass(frozen=True)
class MpdConfig:
    periods: tuple[int, ...] = (2, 3, 5, 7, 11)
    channels: tuple[int, ...] = (32, 128, 512, 1024)
    kernel_size: int = 5
    stride: int = 3
    post_kernel: int = 3
    lrelu_slope: float = 0.1


@dataclass(frozen=True)
class MsdLayer:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int
    groups: int


@dataclass(frozen=True)
class MsdConfig:
    num_scales: int = 3
    pool_kernel: int = 4
    pool_stride: int = 2
    pool_padding: int = 1
    first_scale_norm: str = "spectral"
    layers: tuple[MsdLayer, ...] = ()
    post_kernel: int = 3
    lrelu_slope: float = 0.1


@dataclass(frozen=True)
class DiscriminatorConfig:
    mpd: MpdConfig = field(default_factory=MpdConfig)
    msd: MsdConfig = field(default_factory=MsdConfig)
    init_std: float = 0.01

    @property
    def sub_discriminators(self) -> int:
        return len(self.mpd.periods) + self.msd.num_scales


def discriminator_config_from_mapping(mapping: dict) -> DiscriminatorConfig:
    mpd = mapping["mpd"]
    msd = mapping["msd"]
    return DiscriminatorConfig(
        mpd=MpdConfig(
            periods=tuple(mpd["periods"]),
            channels=tuple(mpd["channels"]),
            kernel_size=mpd["kernel_size"],
            stride=mpd["stride"],
            post_kernel=mpd["post_kernel"],
            lrelu_slope=mpd["lrelu_slope"],
        ),
        msd=MsdConfig(
            num_scales=msd["num_scales"],
            pool_kernel=msd["pooling"]["kernel_size"],
            pool_stride=msd["pooling"]["stride"],
            pool_padding=msd["pooling"]["padding"],
            first_scale_norm=msd["first_scale_norm"],
            layers=tuple(MsdLayer(**layer) for layer in msd["layers"]),
            post_kernel=msd["post_kernel"],
            lrelu_slope=msd["lrelu_slope"],
        ),
        init_std=mapping.get("init_std", 0.01),
    )


def load_default_discriminator_config() -> DiscriminatorConfig:
    text = resources.files("vocbench").joinpath(DEFAULT_LAYOUT_RESOURCE).read_text()
    return discriminator_config_from_mapping(yaml.safe_load(text))


def tiny_discriminator_config() -> DiscriminatorConfig:
    """Same branch structure at toy width, for CPU tests."""
    return DiscriminatorConfig(
        mpd=MpdConfig(channels=(4, 8, 16, 16)),
        msd=MsdConfig(
            layers=(
                MsdLayer(1, 8, 15, 1, 1),
                MsdLayer(8, 8, 41, 2, 4),
                MsdLayer(8, 16, 41, 4, 4),
                MsdLayer(16, 16, 5, 1, 1),
            )
        ),
    )


@dataclass
class DiscriminatorOutput:
    """Per-sub-discriminator score maps plus shallow-to-deep feature lists."""

    logits: list[torch.Tensor]
    features: list[list[torch.Tensor]]


def _normed(conv: nn.Module, norm: str) -> nn.Module:
    if norm == "weight":
        return weight_norm(conv)
    if norm == "spectral":
        return spectral_norm(conv)
    raise ValueError(f"unknown norm {norm!r}")


class PeriodDiscriminator(nn.Module):
    def __init__(self, period: int, cfg: MpdConfig, rng: torch.Generator, init_std: float):
        super().__init__()
        self.period = period
        self.slope = cfg.lrelu_slope
        k, s = cfg.kernel_size, cfg.stride
        convs = []
        in_ch = 1
        for out_ch in cfg.channels:
            conv = nn.Conv2d(in_ch, out_ch, (k, 1), (s, 1), padding=((k - 1) // 2, 0))
            seeded_init(conv, rng, init_std)
            convs.append(_normed(conv, "weight"))
            in_ch = out_ch
        tail = nn.Conv2d(in_ch, in_ch, (k, 1), 1, padding=((k - 1) // 2, 0))
        seeded_init(tail, rng, init_std)
        convs.append(_normed(tail, "weight"))
        self.convs = nn.ModuleList(convs)
        post = nn.Conv2d(in_ch, 1, (cfg.post_kernel, 1), 1, padding=((cfg.post_kernel - 1) // 2, 0))
        seeded_init(post, rng, init_std)
        self.conv_post = _normed(post, "weight")

    def forward(self, x: torch.Tensor):
        b, c, t = x.shape
        if t % self.period != 0:
            # zero-pad up to a multiple of the period before folding to 2-D
            n_pad = self.period - t % self.period
            x = F.pad(x, (0, n_pad))
            t += n_pad
        x = x.view(b, c, t // self.period, self.period)
        features = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), self.slope)
            features.append(x)
        x = self.conv_post(x)
        features.append(x)
        return torch.flatten(x, 1, -1), features


class ScaleDiscriminator(nn.Module):
    def __init__(self, cfg: MsdConfig, norm: str, rng: torch.Generator, init_std: float):
        super().__init__()
        self.slope = cfg.lrelu_slope
        convs = []
        for layer in cfg.layers:
            conv = nn.Conv1d(
                layer.in_channels,
                layer.out_channels,
                layer.kernel,
                stride=layer.stride,
                groups=layer.groups,
                padding=(layer.kernel - 1) // 2,
            )
            seeded_init(conv, rng, init_std)
            convs.append(_normed(conv, norm))
        self.convs = nn.ModuleList(convs)
        out_ch = cfg.layers[-1].out_channels
        post = nn.Conv1d(out_ch, 1, cfg.post_kernel, padding=(cfg.post_kernel - 1) // 2)
        seeded_init(post, rng, init_std)
        self.conv_post = _normed(post, norm)

    def forward(self, x: torch.Tensor):
        features = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), self.slope)
            features.append(x)
        x = self.conv_post(x)
        features.append(x)
        return torch.flatten(x, 1, -1), features


class MultiResolutionDiscriminator(nn.Module):
    """Waveform-only API: one (batch, 1, samples) tensor in, 8 score maps out."""

    def __init__(self, config: DiscriminatorConfig, rng: torch.Generator):
        super().__init__()
        self.config = config
        self.period_discriminators = nn.ModuleList(
            [
                PeriodDiscriminator(p, config.mpd, rng, config.init_std)
                for p in config.mpd.periods
            ]
        )
        scales = []
        for i in range(config.msd.num_scales):
            norm = config.msd.first_scale_norm if i == 0 else "weight"
            scales.append(ScaleDiscriminator(config.msd, norm, rng, config.init_std))
        self.scale_discriminators = nn.ModuleList(scales)
        self.pool = nn.AvgPool1d(
            config.msd.pool_kernel,
            stride=config.msd.pool_stride,
            padding=config.msd.pool_padding,
            ceil_mode=True,
        )

    def _check_input(self, w: torch.Tensor, min_len: int = 1) -> None:
        if w.ndim != 3 or w.size(1) != 1:
            raise ValueError(f"expected waveform of shape (batch, 1, samples), got {tuple(w.shape)}")
        if w.size(2) < min_len:
            raise ValueError(f"waveform of {w.size(2)} samples is too short (need >= {min_len})")

    def mpd_forward(self, w: torch.Tensor) -> DiscriminatorOutput:
        self._check_input(w, min_len=max(self.config.mpd.periods))
        logits, features = [], []
        for disc in self.period_discriminators:
            score, fmaps = disc(w)
            logits.append(score)
            features.append(fmaps)
        return DiscriminatorOutput(logits=logits, features=features)

    def msd_forward(self, w: torch.Tensor) -> DiscriminatorOutput:
        self._check_input(w)
        logits, features = [], []
        x = w
        for disc in self.scale_discriminators:
            score, fmaps = disc(x)
            logits.append(score)
            features.append(fmaps)
            x = self.pool(x)
        return DiscriminatorOutput(logits=logits, features=features)

    def forward(self, w: torch.Tensor) -> DiscriminatorOutput:
        periods = self.mpd_forward(w)
        scales = self.msd_forward(w)
        return DiscriminatorOutput(
            logits=periods.logits + scales.logits,
            features=periods.features + scales.features,
        )


def build_discriminator(config: DiscriminatorConfig, seed: int = 0) -> MultiResolutionDiscriminator:
    """Deterministic build; spectral-norm power-iteration vectors are seeded too."""
    rng = torch.Generator()
    rng.manual_seed(seed)
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return MultiResolutionDiscriminator(config, rng)


def discriminate(
    discriminator: MultiResolutionDiscriminator, w: torch.Tensor
) -> DiscriminatorOutput:
    """Both branches on one waveform, periods first then scales."""
    return discriminator(w)
