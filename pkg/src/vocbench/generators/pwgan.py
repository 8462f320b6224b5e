"""Parallel-WaveGAN generator: a non-causal WaveNet that shapes one
Gaussian latent per audio sample, conditioned on an upsampled mel."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from .common import GeneratorBase, conv1d, conv2d, nn_upsample
from .configs import PwganConfig


class ResidualBlock(nn.Module):
    def __init__(self, cfg: PwganConfig, dilation: int, rng: torch.Generator):
        super().__init__()
        half = cfg.gate_channels // 2
        self.conv = conv1d(
            cfg.residual_channels, cfg.gate_channels, cfg.kernel_size, rng, cfg.init_std,
            dilation=dilation,
        )
        self.conv_aux = conv1d(cfg.in_mels, cfg.gate_channels, 1, rng, cfg.init_std, bias=False)
        self.conv_out = conv1d(half, cfg.residual_channels, 1, rng, cfg.init_std)
        self.conv_skip = conv1d(half, cfg.skip_channels, 1, rng, cfg.init_std)

    def forward(self, x, cond):
        y = self.conv(x) + self.conv_aux(cond)
        a, b = y.chunk(2, dim=1)
        gated = torch.tanh(a) * torch.sigmoid(b)
        residual = (x + self.conv_out(gated)) * math.sqrt(0.5)
        return residual, self.conv_skip(gated)


class PwganGenerator(GeneratorBase):
    def __init__(self, config: PwganConfig, rng: torch.Generator):
        super().__init__(config)
        c = config
        self.first_conv = conv1d(1, c.residual_channels, 1, rng, c.init_std)
        self.conv_in = conv1d(c.in_mels, c.in_mels, 1, rng, c.init_std, bias=False)
        self.upsample_convs = nn.ModuleList(
            [
                conv2d(1, 1, (1, 2 * r + 1), rng, c.init_std, padding=(0, r), bias=False)
                for r in c.upsample_rates
            ]
        )
        self.blocks = nn.ModuleList(
            [ResidualBlock(c, c.dilation_at(i), rng) for i in range(c.layers)]
        )
        half = c.skip_channels
        self.post_mix = conv1d(half, half, 1, rng, c.init_std)
        self.post_out = conv1d(half, 1, 1, rng, c.init_std)

    def noise_shape(self, frames: int) -> tuple[int, int]:
        return (1, frames * 256)

    def _upsample_conditioning(self, mel):
        c = self.conv_in(mel).unsqueeze(1)  # (B, 1, mels, T)
        for rate, conv in zip(self.config.upsample_rates, self.upsample_convs):
            c = nn_upsample(c, rate)
            c = conv(c)
        return c.squeeze(1)

    def _synthesize(self, mel, noise):
        cond = self._upsample_conditioning(mel)
        x = self.first_conv(noise)
        skips = 0
        for block in self.blocks:
            x, skip = block(x, cond)
            skips = skips + skip
        skips = skips * math.sqrt(1.0 / len(self.blocks))
        y = self.post_mix(F.relu(skips))
        return self.post_out(F.relu(y))
