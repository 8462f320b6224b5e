"""HiFi-GAN V2 generator: transposed-convolution upsampling interleaved
with multi-receptive-field fusion (parallel multi-kernel residual blocks)."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .common import GeneratorBase, conv1d, conv_transpose1d
from .configs import HifiGanV2Config


class ResBlock(nn.Module):
    def __init__(self, channels, kernel, dilations, slope, rng, init_std):
        super().__init__()
        self.slope = slope
        self.convs1 = nn.ModuleList(
            [conv1d(channels, channels, kernel, rng, init_std, dilation=d) for d in dilations]
        )
        self.convs2 = nn.ModuleList(
            [conv1d(channels, channels, kernel, rng, init_std) for _ in dilations]
        )

    def forward(self, x):
        for c1, c2 in zip(self.convs1, self.convs2):
            xt = c1(F.leaky_relu(x, self.slope))
            xt = c2(F.leaky_relu(xt, self.slope))
            x = x + xt
        return x


class HifiGanV2Generator(GeneratorBase):
    def __init__(self, config: HifiGanV2Config, rng: torch.Generator):
        super().__init__(config)
        c = config
        self.num_kernels = len(c.resblock_kernels)
        self.conv_pre = conv1d(c.in_mels, c.initial_channels, c.io_kernel, rng, c.init_std)
        self.ups = nn.ModuleList()
        self.resblocks = nn.ModuleList()
        channels = c.initial_channels
        for rate, kernel in zip(c.upsample_rates, c.upsample_kernels):
            self.ups.append(
                conv_transpose1d(
                    channels, channels // 2, kernel, rate, rng, c.init_std,
                    padding=(kernel - rate) // 2,
                )
            )
            channels //= 2
            for k, dils in zip(c.resblock_kernels, c.resblock_dilations):
                self.resblocks.append(ResBlock(channels, k, dils, c.lrelu_slope, rng, c.init_std))
        self.conv_post = conv1d(channels, 1, c.io_kernel, rng, c.init_std)

    def _synthesize(self, mel, noise):
        x = self.conv_pre(mel)
        for i, up in enumerate(self.ups):
            x = up(F.leaky_relu(x, self.config.lrelu_slope))
            fused = 0
            for block in self.resblocks[i * self.num_kernels : (i + 1) * self.num_kernels]:
                fused = fused + block(x)
            x = fused / self.num_kernels
        x = self.conv_post(F.leaky_relu(x, self.config.lrelu_slope))
        return torch.tanh(x)
