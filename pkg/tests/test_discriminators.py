import torch
import pytest

from vocbench.discriminators import (
    build_discriminator,
    load_default_discriminator_config,
    tiny_discriminator_config,
)
from vocbench.generators import GeneratorKind, build_generator, draw_noise, tiny_config


@pytest.fixture(scope="module")
def default_disc():
    return build_discriminator(load_default_discriminator_config(), seed=0).eval()


@pytest.fixture(scope="module")
def tiny_disc():
    return build_discriminator(tiny_discriminator_config(), seed=0).eval()


def test_layout_counts(default_disc):
    cfg = default_disc.config
    assert cfg.mpd.periods == (2, 3, 5, 7, 11)
    assert cfg.msd.num_scales == 3
    assert cfg.sub_discriminators == 8
    w = torch.randn(2, 1, 8192) * 0.1
    out = default_disc(w)
    assert len(out.logits) == 8
    assert len(out.features) == 8
    assert all(l.shape[1] > 0 for l in out.logits)


def test_branch_counts(default_disc):
    w = torch.randn(1, 1, 8192) * 0.1
    assert len(default_disc.mpd_forward(w).logits) == 5
    assert len(default_disc.msd_forward(w).logits) == 3


def test_period_fold_pads_to_multiple(default_disc):
    # period 3 on 8192 samples folds over ceil(8192/3)=2731 rows after zero pad
    disc3 = default_disc.period_discriminators[1]
    assert disc3.period == 3
    _, features = disc3(torch.randn(1, 1, 8192) * 0.1)
    rows = 8193 // 3
    expected = (rows + 2 * 2 - 5) // 3 + 1
    assert features[0].shape[2] == expected
    assert features[0].shape[3] == 3


def test_pool_sees_ceil_half(default_disc):
    for n in (7, 8, 101, 8192):
        x = torch.randn(1, 1, n)
        assert default_disc.pool(x).shape[-1] == (n + 1) // 2


def test_features_shallow_to_deep(default_disc):
    w = torch.randn(1, 1, 4096) * 0.1
    out = default_disc.msd_forward(w)
    for fmaps in out.features:
        sizes = [f.shape[-1] for f in fmaps]
        assert sizes == sorted(sizes, reverse=True) or len(set(sizes)) < len(sizes)
        assert len(fmaps) == len(default_disc.config.msd.layers) + 1


def test_identical_inputs_identical_outputs(default_disc):
    w = torch.randn(1, 1, 5000) * 0.2
    a, b = default_disc(w), default_disc(w.clone())
    assert all(torch.equal(x, y) for x, y in zip(a.logits, b.logits))


def test_zero_input_finite(default_disc):
    out = default_disc(torch.zeros(1, 1, 4096))
    assert all(torch.isfinite(l).all() for l in out.logits)
    for fmaps in out.features:
        assert all(torch.isfinite(f).all() for f in fmaps)


def test_full_scale_inputs_finite(default_disc):
    w = torch.sign(torch.randn(1, 1, 4096))  # extreme +/-1 signal
    out = default_disc(w)
    assert all(torch.isfinite(l).all() for l in out.logits)


def test_input_validation(default_disc):
    with pytest.raises(ValueError):
        default_disc(torch.zeros(1, 1, 0))
    with pytest.raises(ValueError):
        default_disc(torch.zeros(1, 2, 100))
    with pytest.raises(ValueError):
        default_disc.mpd_forward(torch.zeros(1, 1, 5))  # below the max period


def test_gradient_reaches_input(tiny_disc):
    w = (torch.randn(1, 1, 2048) * 0.1).requires_grad_(True)
    out = tiny_disc(w)
    total = sum(l.sum() for l in out.logits)
    total.backward()
    assert w.grad is not None
    assert w.grad.abs().sum() > 0


def test_accepts_every_generator_output(tiny_disc):
    for kind in GeneratorKind:
        cfg = tiny_config(kind)
        g = build_generator(cfg, seed=1)
        mel = torch.randn(1, 80, 8)
        noise = draw_noise(cfg, 1, 8, torch.Generator().manual_seed(0))
        wav = g(mel, noise)
        out = tiny_disc(wav)
        assert len(out.logits) == 8
