"""UMGAN generator: MelGAN's upsampling layout at constant width, with
gated activation units inside every residual block."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .common import GeneratorBase, conv1d, conv_transpose1d
from .configs import UmganConfig


class GauBlock(nn.Module):
    """Residual block gated WaveNet-style: tanh(a) * sigmoid(b)."""

    def __init__(self, channels, kernel, dilation, rng, init_std):
        super().__init__()
        self.conv = conv1d(channels, 2 * channels, kernel, rng, init_std, dilation=dilation)
        self.conv_out = conv1d(channels, channels, 1, rng, init_std)

    def forward(self, x):
        a, b = self.conv(x).chunk(2, dim=1)
        return x + self.conv_out(torch.tanh(a) * torch.sigmoid(b))


class UmganGenerator(GeneratorBase):
    def __init__(self, config: UmganConfig, rng: torch.Generator):
        super().__init__(config)
        c = config
        self.conv_pre = conv1d(c.in_mels, c.channels, c.io_kernel, rng, c.init_std)
        self.ups = nn.ModuleList()
        self.stages = nn.ModuleList()
        for rate in c.upsample_rates:
            self.ups.append(
                conv_transpose1d(
                    c.channels, c.channels, 2 * rate, rate, rng, c.init_std,
                    padding=rate // 2 + rate % 2,
                    output_padding=rate % 2,
                )
            )
            self.stages.append(
                nn.ModuleList(
                    [
                        GauBlock(c.channels, c.stack_kernel, c.dilation_base**j, rng, c.init_std)
                        for j in range(c.blocks_per_stage)
                    ]
                )
            )
        self.conv_post = conv1d(c.channels, 1, c.io_kernel, rng, c.init_std)

    def _synthesize(self, mel, noise):
        x = self.conv_pre(mel)
        for up, stage in zip(self.ups, self.stages):
            x = up(F.leaky_relu(x, self.config.lrelu_slope))
            for block in stage:
                x = block(x)
        x = self.conv_post(F.leaky_relu(x, self.config.lrelu_slope))
        return torch.tanh(x)
