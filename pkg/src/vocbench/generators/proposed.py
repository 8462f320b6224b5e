"""Latent-driven generator with large-kernel group-wise residual blocks.

Noise and mel are both lifted to audio rate by alternating nearest-neighbor
upsampling with kernel-3 convolutions (8x, 8x, 2x, 2x). Twelve residual
blocks then run at audio rate: a group-wise convolution with a very large
kernel, a 1x1 channel mixer closed by the residual connection, and a
kernel-3 convolution with block-wise doubling dilation that feeds a
WaveNet-style skip path into the 1x1 postnet. The upsampled mel is added
element-wise to the input of every block.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .common import GeneratorBase, conv1d, nn_upsample
from .configs import ProposedConfig


class AxialResidualBlock(nn.Module):
    def __init__(self, cfg: ProposedConfig, dilation: int, rng: torch.Generator):
        super().__init__()
        ch = cfg.channels
        self.slope = cfg.lrelu_slope
        self.conv_gw = conv1d(ch, ch, cfg.gw_kernel, rng, cfg.init_std, groups=cfg.gw_groups)
        self.conv_mix = conv1d(ch, ch, 1, rng, cfg.init_std)
        self.conv_skip = conv1d(ch, ch, 3, rng, cfg.init_std, dilation=dilation)

    def forward(self, x):
        """Returns (residual output for the next block, skip contribution)."""
        y = F.leaky_relu(self.conv_gw(x), self.slope)
        y = F.leaky_relu(self.conv_mix(y), self.slope)
        residual = x + y
        skip = F.leaky_relu(self.conv_skip(residual), self.slope)
        return residual, skip


class _UpsampleBranch(nn.Module):
    def __init__(self, in_channels: int, cfg: ProposedConfig, rng: torch.Generator):
        super().__init__()
        self.rates = cfg.upsample_rates
        self.slope = cfg.lrelu_slope
        chans = [in_channels] + [cfg.channels] * len(cfg.upsample_rates)
        self.convs = nn.ModuleList(
            [
                conv1d(chans[i], chans[i + 1], cfg.up_kernel, rng, cfg.init_std)
                for i in range(len(self.rates))
            ]
        )

    def forward(self, x):
        for rate, conv in zip(self.rates, self.convs):
            x = nn_upsample(x, rate)
            x = F.leaky_relu(conv(x), self.slope)
        return x


class ProposedGenerator(GeneratorBase):
    def __init__(self, config: ProposedConfig, rng: torch.Generator):
        super().__init__(config)
        c = config
        self.mel_branch = _UpsampleBranch(c.in_mels, c, rng)
        self.noise_branch = _UpsampleBranch(c.noise_dim, c, rng)
        self.blocks = nn.ModuleList(
            [AxialResidualBlock(c, c.dilation_at(i), rng) for i in range(c.blocks)]
        )
        self.postnet = conv1d(c.channels, 1, 1, rng, c.init_std)

    def noise_shape(self, frames: int) -> tuple[int, int]:
        return (self.config.noise_dim, frames)

    def residual_net_forward(self, x: torch.Tensor, conditioning: torch.Tensor) -> torch.Tensor:
        skips = 0
        for block in self.blocks:
            x, skip = block(x + conditioning)
            skips = skips + skip
        return self.postnet(skips)

    def _synthesize(self, mel, noise):
        conditioning = self.mel_branch(mel)
        x = self.noise_branch(noise)
        return torch.tanh(self.residual_net_forward(x, conditioning))
