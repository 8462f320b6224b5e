import dataclasses

import pytest
import torch

from vocbench.generators import (
    GeneratorKind,
    build_generator,
    generator_receptive_field,
    probe_receptive_field_empirical,
    receptive_field,
    tiny_config,
)
from vocbench.generators.configs import ProposedConfig
from vocbench.generators.receptive import Conv, Parallel, TConv, Upsample, rectify_for_probe

ALL_KINDS = list(GeneratorKind)


def test_single_conv():
    assert receptive_field([Conv(3)]) == 3


def test_dilated_stack():
    assert receptive_field([Conv(3, 1), Conv(3, 2), Conv(3, 4)]) == 15


def test_kernel_one_network_spans_upsample_factor():
    assert receptive_field([Upsample(256), Conv(1)]) == 256


def test_transposed_conv_span():
    assert receptive_field([TConv(16, 8)]) == 16
    assert receptive_field([Conv(3), TConv(4, 2)]) == 8


def test_parallel_takes_widest_branch():
    plan = [Parallel(((Conv(3, 1), Conv(3, 4)), (Conv(7, 1),), ()))]
    assert receptive_field(plan) == 1 + 10


def test_unsupported_layer_type():
    with pytest.raises(TypeError):
        receptive_field(["welp"])
    with pytest.raises(TypeError):
        receptive_field([Parallel(((Upsample(2),),))])


def test_proposed_default_block12_is_8369():
    cfg = ProposedConfig()
    assert receptive_field(cfg.residual_rf_plan(12)) == 8369
    # growth is monotone over blocks
    spans = [receptive_field(cfg.residual_rf_plan(b)) for b in range(1, 13)]
    assert spans == sorted(spans)
    assert spans[0] == 1 + (cfg.gw_kernel - 1) + 2


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_analytic_matches_empirical_tiny(kind):
    cfg = tiny_config(kind)
    g = build_generator(cfg, seed=5)
    assert generator_receptive_field(cfg) == probe_receptive_field_empirical(g)


def test_probe_grows_with_dilation():
    base = tiny_config(GeneratorKind.PROPOSED)
    wider = dataclasses.replace(base, dilation_base=3)
    g_base = build_generator(base, seed=0)
    g_wide = build_generator(wider, seed=0)
    assert probe_receptive_field_empirical(g_wide) > probe_receptive_field_empirical(g_base)


def test_proposed_residual_net_probe_matches_block12():
    """Empirical impulse through the audio-rate residual net alone."""
    cfg = ProposedConfig()
    probe = rectify_for_probe(build_generator(cfg, seed=0))
    span_target = receptive_field(cfg.residual_rf_plan(12))
    length = 2 * span_target + 512
    x = torch.zeros(1, cfg.channels, length, dtype=torch.float64)
    cond = torch.zeros_like(x)
    baseline = probe.residual_net_forward(x, cond)
    x[:, :, length // 2] = 1.0
    touched = (probe.residual_net_forward(x, cond) - baseline).abs().flatten() > 0
    idx = touched.nonzero().flatten()
    assert int(idx[-1] - idx[0] + 1) == span_target == 8369
