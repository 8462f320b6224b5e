import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from vocbench.discriminators import DiscriminatorOutput
from vocbench.dsp import MelConfig, Waveform
from vocbench.training import (
    TrainConfig,
    adversarial_losses,
    feature_matching_loss,
    lr_at,
    mel_l1_loss,
)

CFG = MelConfig()


def _logit_output(values: list[float], positions: int = 10) -> DiscriminatorOutput:
    return DiscriminatorOutput(
        logits=[torch.full((1, positions), v) for v in values],
        features=[[] for _ in values],
    )


def test_perfect_discriminator_zero_loss():
    real = _logit_output([1.0] * 8)
    fake = _logit_output([0.0] * 8)
    loss_d, _ = adversarial_losses(real, fake)
    assert float(loss_d) == 0.0


def test_fooled_discriminator_zero_generator_loss():
    real = _logit_output([0.3] * 8)
    fake = _logit_output([1.0] * 8)
    _, loss_g = adversarial_losses(real, fake)
    assert float(loss_g) == 0.0


def test_worst_case_eight_subdiscriminators():
    real = _logit_output([0.0] * 8)
    fake = _logit_output([1.0] * 8)
    loss_d, _ = adversarial_losses(real, fake)
    assert float(loss_d) == pytest.approx(16.0, abs=1e-12)


def test_adversarial_count_mismatch():
    with pytest.raises(ValueError):
        adversarial_losses(_logit_output([0.0] * 8), _logit_output([0.0] * 7))


def test_feature_matching_identical_zero():
    feats = [[torch.randn(2, 3, 5)] for _ in range(3)]
    assert float(feature_matching_loss(feats, feats)) == 0.0


def test_feature_matching_constant_difference():
    real = [[torch.zeros(2, 4, 8)]]
    fake = [[torch.full((2, 4, 8), 0.5)]]
    assert float(feature_matching_loss(real, fake)) == pytest.approx(0.5, abs=1e-7)


def test_feature_matching_elementwise_oracle():
    torch.manual_seed(0)
    real = [[torch.randn(2, 3, 4), torch.randn(1, 5)], [torch.randn(2, 2)]]
    fake = [[torch.randn(2, 3, 4), torch.randn(1, 5)], [torch.randn(2, 2)]]
    expected = 0.0
    for rl, fl in zip(real, fake):
        for r, f in zip(rl, fl):
            diff = 0.0
            count = 0
            for a, b in zip(r.flatten().tolist(), f.flatten().tolist()):
                diff += abs(a - b)
                count += 1
            expected += diff / count
    got = float(feature_matching_loss(real, fake))
    assert got == pytest.approx(expected, rel=1e-6)


def test_feature_matching_shape_mismatch():
    with pytest.raises(ValueError):
        feature_matching_loss([[torch.zeros(1, 2)]], [[torch.zeros(1, 3)]])
    with pytest.raises(ValueError):
        feature_matching_loss([[torch.zeros(1, 2)]], [[torch.zeros(1, 2), torch.zeros(1)]])


def test_mel_l1_identical_zero():
    x = torch.randn(2, 4096) * 0.1
    assert float(mel_l1_loss(x, x.clone(), CFG)) == 0.0


def test_mel_l1_silence_vs_tone_positive():
    t = torch.arange(8192) / 22050.0
    tone = (0.5 * torch.sin(2 * math.pi * 440 * t)).unsqueeze(0)
    silence = torch.zeros_like(tone)
    assert float(mel_l1_loss(tone, silence, CFG)) > 1.0


def test_mel_l1_symmetric():
    torch.manual_seed(1)
    a = torch.randn(1, 4096) * 0.2
    b = torch.randn(1, 4096) * 0.2
    assert float(mel_l1_loss(a, b, CFG)) == pytest.approx(float(mel_l1_loss(b, a, CFG)))


def test_mel_l1_length_mismatch():
    with pytest.raises(ValueError):
        mel_l1_loss(torch.zeros(1, 4096), torch.zeros(1, 4097), CFG)


def test_mel_l1_waveform_interface():
    import numpy as np

    rng = np.random.default_rng(0)
    a = Waveform(0.1 * rng.standard_normal(4096))
    value = mel_l1_loss(a, a, CFG)
    assert isinstance(value, float) and value == 0.0
    with pytest.raises(TypeError):
        mel_l1_loss(a, torch.zeros(1, 4096), CFG)


def test_lr_schedule_values():
    cfg = TrainConfig()
    assert lr_at(0, cfg) == pytest.approx(2.0e-4, abs=1e-18)
    assert lr_at(1, cfg) == pytest.approx(1.998e-4, rel=1e-12)
    assert lr_at(1000, cfg) == pytest.approx(2e-4 * 0.999**1000, rel=1e-12)
    assert lr_at(1000, cfg) == pytest.approx(7.354e-5, rel=1e-3)
    with pytest.raises(ValueError):
        lr_at(-1, cfg)


@settings(deadline=None, max_examples=30)
@given(e1=st.integers(0, 5000), e2=st.integers(0, 5000))
def test_lr_monotone_non_increasing(e1, e2):
    cfg = TrainConfig()
    lo, hi = sorted((e1, e2))
    assert lr_at(hi, cfg) <= lr_at(lo, cfg)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"batch_size": 0},
        {"lr_init": 0.0},
        {"lr_decay_per_epoch": 0.0},
        {"lr_decay_per_epoch": 1.5},
        {"betas": (0.8, 1.0)},
        {"max_steps": -5},
        {"segment_samples": 0},
    ],
)
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)
