"""Shared building blocks: seeded weight-normed convolutions and the
generator base class enforcing the mel/noise forward contract."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn.utils.parametrizations import weight_norm


def conv1d(
    in_channels: int,
    out_channels: int,
    kernel_size: int,
    rng: torch.Generator,
    init_std: float,
    stride: int = 1,
    dilation: int = 1,
    groups: int = 1,
    padding: int | None = None,
    bias: bool = True,
) -> nn.Conv1d:
    if padding is None:
        padding = (kernel_size - 1) // 2 * dilation
    conv = nn.Conv1d(
        in_channels,
        out_channels,
        kernel_size,
        stride=stride,
        padding=padding,
        dilation=dilation,
        groups=groups,
        bias=bias,
    )
    _init(conv, rng, init_std)
    return weight_norm(conv)


def conv_transpose1d(
    in_channels: int,
    out_channels: int,
    kernel_size: int,
    stride: int,
    rng: torch.Generator,
    init_std: float,
    padding: int = 0,
    output_padding: int = 0,
) -> nn.ConvTranspose1d:
    conv = nn.ConvTranspose1d(
        in_channels,
        out_channels,
        kernel_size,
        stride=stride,
        padding=padding,
        output_padding=output_padding,
    )
    _init(conv, rng, init_std)
    return weight_norm(conv)


def conv2d(
    in_channels: int,
    out_channels: int,
    kernel_size: tuple[int, int],
    rng: torch.Generator,
    init_std: float,
    stride: tuple[int, int] = (1, 1),
    padding: tuple[int, int] = (0, 0),
    bias: bool = True,
) -> nn.Conv2d:
    conv = nn.Conv2d(
        in_channels, out_channels, kernel_size, stride=stride, padding=padding, bias=bias
    )
    _init(conv, rng, init_std)
    return weight_norm(conv)


def seeded_init(conv: nn.Module, rng: torch.Generator, init_std: float | None) -> None:
    """Public alias used by the discriminator builders."""
    _init(conv, rng, init_std)


def _init(conv: nn.Module, rng: torch.Generator, init_std: float | None) -> None:
    # weights drawn before weight norm is attached, so the norm factors
    # start consistent with the draw; init_std None means fan-in scaling
    # (kinds with deep multiplicative gating vanish under a fixed 0.01)
    with torch.no_grad():
        if init_std is None:
            if isinstance(conv, nn.ConvTranspose1d):
                fan_in = conv.weight.size(0) // conv.groups * conv.weight[0][0].numel()
            else:
                fan_in = conv.weight[0].numel()
            init_std = fan_in**-0.5
        conv.weight.normal_(0.0, init_std, generator=rng)
        if conv.bias is not None:
            conv.bias.zero_()


def nn_upsample(x: torch.Tensor, factor: int) -> torch.Tensor:
    """Nearest-neighbor upsampling along the last (time) axis."""
    return x.repeat_interleave(factor, dim=-1)


class GeneratorBase(nn.Module):
    """Common forward contract: (batch, mels, T) in, (batch, 1, 256*T) out."""

    def __init__(self, config):
        super().__init__()
        self.config = config

    @property
    def kind(self):
        return self.config.kind

    @property
    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)

    def noise_shape(self, frames: int) -> tuple[int, int] | None:
        """Latent shape (channels, length) per batch item; None for mel-only."""
        return None

    def forward(self, mel: torch.Tensor, noise: torch.Tensor | None = None) -> torch.Tensor:
        self._check_inputs(mel, noise)
        return self._synthesize(mel, noise)

    def _synthesize(self, mel, noise):
        raise NotImplementedError

    def _check_inputs(self, mel: torch.Tensor, noise: torch.Tensor | None) -> None:
        if mel.ndim != 3 or mel.size(1) != self.config.in_mels:
            raise ValueError(
                f"expected mel of shape (batch, {self.config.in_mels}, frames), "
                f"got {tuple(mel.shape)}"
            )
        if mel.size(2) < 1:
            raise ValueError("mel input has no frames")
        if not torch.isfinite(mel).all():
            raise ValueError("non-finite values in mel input")
        expected = self.noise_shape(mel.size(2))
        if expected is None:
            if noise is not None:
                raise ValueError(f"{self.kind.value} takes no noise latent")
            return
        if noise is None:
            raise ValueError(f"{self.kind.value} requires a noise latent")
        if tuple(noise.shape) != (mel.size(0), *expected):
            raise ValueError(
                f"expected noise of shape {(mel.size(0), *expected)}, got {tuple(noise.shape)}"
            )
        if not torch.isfinite(noise).all():
            raise ValueError("non-finite values in noise latent")
