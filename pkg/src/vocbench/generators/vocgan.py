"""VocGAN generator, waveform-output only: a long 4x/4x/2x/2x/2x/2x
upsampling chain whose late stages re-inject mel conditioning.

The original design's intermediate-resolution waveform heads are omitted;
discrimination here consumes nothing but the final waveform.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .common import GeneratorBase, conv1d, conv_transpose1d, nn_upsample
from .configs import VocGanConfig
from .melgan import ResnetBlock


class VocGanGenerator(GeneratorBase):
    def __init__(self, config: VocGanConfig, rng: torch.Generator):
        super().__init__(config)
        c = config
        chans = c.stage_channels()
        self.conv_pre = conv1d(c.in_mels, chans[0], c.io_kernel, rng, c.init_std)
        self.ups = nn.ModuleList()
        self.stages = nn.ModuleList()
        aux_convs: dict[str, nn.Module] = {}
        first_aux = len(c.upsample_rates) - c.aux_stages
        rate_products = []
        running = 1
        for i, rate in enumerate(c.upsample_rates):
            running *= rate
            rate_products.append(running)
            self.ups.append(
                conv_transpose1d(
                    chans[i], chans[i + 1], 2 * rate, rate, rng, c.init_std,
                    padding=rate // 2 + rate % 2,
                    output_padding=rate % 2,
                )
            )
            self.stages.append(
                nn.ModuleList(
                    [
                        ResnetBlock(
                            chans[i + 1], c.stack_kernel, c.dilation_base**j,
                            c.lrelu_slope, rng, c.init_std,
                        )
                        for j in range(c.blocks_per_stage)
                    ]
                )
            )
            if i >= first_aux:
                aux_convs[str(i)] = conv1d(c.in_mels, chans[i + 1], 1, rng, c.init_std)
        self.aux_convs = nn.ModuleDict(aux_convs)
        self.rate_products = rate_products
        self.conv_post = conv1d(chans[-1], 1, c.io_kernel, rng, c.init_std)

    def _synthesize(self, mel, noise):
        x = self.conv_pre(mel)
        for i, (up, stage) in enumerate(zip(self.ups, self.stages)):
            x = up(F.leaky_relu(x, self.config.lrelu_slope))
            if str(i) in self.aux_convs:
                aux = self.aux_convs[str(i)]
                x = x + nn_upsample(aux(mel), self.rate_products[i])
            for block in stage:
                x = block(x)
        x = self.conv_post(F.leaky_relu(x, self.config.lrelu_slope))
        return torch.tanh(x)
