from pathlib import Path

import numpy as np
import pytest

from vocbench.datasets import TrainingSegment, build_manifest, cache_mels
from vocbench.dsp import MelConfig, Waveform, mel_spectrogram

FIXTURE_CORPUS = Path(__file__).parent / "fixtures" / "corpus"


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    assert FIXTURE_CORPUS.is_dir(), "run scripts/make_fixture_corpus.py first"
    return FIXTURE_CORPUS


@pytest.fixture(scope="session")
def mel_cfg() -> MelConfig:
    return MelConfig()


@pytest.fixture(scope="session")
def fixture_data(corpus_root, mel_cfg, tmp_path_factory):
    """Manifest (8 train / 2 validation) and mel cache over the fixture corpus."""
    cache_dir = tmp_path_factory.mktemp("melcache")
    manifest = build_manifest(corpus_root, split_sizes=(8, 2), seed=7, mel_config=mel_cfg)
    cache = cache_mels(manifest, mel_cfg, cache_dir)
    assert not cache.errors
    return manifest, cache


def make_fixed_batch(mel_cfg: MelConfig, batch_size: int = 2, segment: int = 2048):
    """Deterministic harmonic batch for overfit-style tests."""
    rng = np.random.default_rng(0)
    batch = []
    for i in range(batch_size):
        audio = 0.4 * np.sin(2 * np.pi * (220 + 110 * i) * np.arange(segment) / 22050)
        audio = audio + 0.01 * rng.standard_normal(segment)
        mel = mel_spectrogram(Waveform(audio), mel_cfg).values[:, : segment // mel_cfg.hop_size]
        batch.append(TrainingSegment(audio=audio, mel=mel, source_id=f"fixed_{i}"))
    return batch
