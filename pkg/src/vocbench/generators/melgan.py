"""MelGAN generator: per upsampling level, a transposed convolution paired
with a stack of dilated residual blocks."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .common import GeneratorBase, conv1d, conv_transpose1d
from .configs import MelGanConfig


class ResnetBlock(nn.Module):
    def __init__(self, dim, kernel, dilation, slope, rng, init_std):
        super().__init__()
        self.slope = slope
        self.conv_dilated = conv1d(dim, dim, kernel, rng, init_std, dilation=dilation)
        self.conv_mix = conv1d(dim, dim, 1, rng, init_std)
        self.shortcut = conv1d(dim, dim, 1, rng, init_std)

    def forward(self, x):
        y = self.conv_dilated(F.leaky_relu(x, self.slope))
        y = self.conv_mix(F.leaky_relu(y, self.slope))
        return y + self.shortcut(x)


class MelGanGenerator(GeneratorBase):
    def __init__(self, config: MelGanConfig, rng: torch.Generator):
        super().__init__(config)
        c = config
        mult = 2 ** len(c.upsample_rates)
        layers: list[nn.Module] = [
            conv1d(c.in_mels, mult * c.ngf, c.io_kernel, rng, c.init_std)
        ]
        for rate in c.upsample_rates:
            layers += [
                nn.LeakyReLU(c.lrelu_slope),
                conv_transpose1d(
                    mult * c.ngf, mult * c.ngf // 2, 2 * rate, rate, rng, c.init_std,
                    padding=rate // 2 + rate % 2,
                    output_padding=rate % 2,
                ),
            ]
            layers += [
                ResnetBlock(
                    mult * c.ngf // 2, c.stack_kernel, c.dilation_base**j,
                    c.lrelu_slope, rng, c.init_std,
                )
                for j in range(c.n_residual_layers)
            ]
            mult //= 2
        layers += [
            nn.LeakyReLU(c.lrelu_slope),
            conv1d(c.ngf, 1, c.io_kernel, rng, c.init_std),
            nn.Tanh(),
        ]
        self.model = nn.Sequential(*layers)

    def _synthesize(self, mel, noise):
        return self.model(mel)
