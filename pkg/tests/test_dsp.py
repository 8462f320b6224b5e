import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import dct

from vocbench.dsp import (
    MCD_ALPHA,
    AlignmentPath,
    ClippingWarning,
    MelConfig,
    MfccSequence,
    Waveform,
    diagonal_path,
    dtw_align,
    mcd,
    mel_filterbank,
    mel_spectrogram,
    mfcc,
    normalize_loudness,
    path_cost,
    zscore_normalize,
)

CFG = MelConfig()


def tone(freq=440.0, seconds=1.0, amp=0.5, sr=22050):
    t = np.arange(int(sr * seconds)) / sr
    return Waveform(amp * np.sin(2 * np.pi * freq * t), sr)


# ---------------------------------------------------------------------------
# mel spectrogram
# ---------------------------------------------------------------------------


def test_mel_shape_one_second():
    mel = mel_spectrogram(tone(seconds=1.0), CFG)
    assert mel.values.shape == (80, 87)


@pytest.mark.parametrize("frames", [1, 4, 16])
def test_mel_frame_count_multiples_of_hop(frames):
    w = Waveform(np.zeros(256 * frames), 22050)
    assert mel_spectrogram(w, CFG).values.shape[1] == frames + 1


@pytest.mark.parametrize("length", [1, 100, 1000, 22050])
def test_mel_zero_waveform_is_floor(length):
    mel = mel_spectrogram(Waveform(np.zeros(length), 22050), CFG)
    assert np.allclose(mel.values, math.log(CFG.log_floor))


def test_mel_rejects_empty_and_rate_mismatch():
    with pytest.raises(ValueError):
        mel_spectrogram(Waveform(np.zeros(0), 22050), CFG)
    with pytest.raises(ValueError):
        mel_spectrogram(tone(sr=16000), CFG)


def _reference_logmel(samples: np.ndarray, cfg: MelConfig) -> np.ndarray:
    """Independent re-implementation: loop-framed STFT and formula filterbank."""
    pad = cfg.n_fft // 2
    x = np.concatenate([samples[1 : pad + 1][::-1], samples, samples[-pad - 1 : -1][::-1]])
    n = np.arange(cfg.win_size)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.win_size)  # periodic hann
    frames = []
    start = 0
    while start + cfg.n_fft <= len(x):
        frames.append(np.abs(np.fft.rfft(x[start : start + cfg.n_fft] * window)))
        start += cfg.hop_size

    def to_mel(f):
        return f / (200.0 / 3.0) if f < 1000.0 else 15.0 + math.log(f / 1000.0) / (math.log(6.4) / 27.0)

    def to_hz(m):
        return m * (200.0 / 3.0) if m < 15.0 else 1000.0 * math.exp((math.log(6.4) / 27.0) * (m - 15.0))

    edges = [to_hz(to_mel(cfg.fmin) + i * (to_mel(cfg.fmax) - to_mel(cfg.fmin)) / (cfg.n_mels + 1))
             for i in range(cfg.n_mels + 2)]
    bins = [cfg.sample_rate * k / cfg.n_fft for k in range(cfg.n_fft // 2 + 1)]
    fb = np.zeros((cfg.n_mels, len(bins)))
    for m in range(cfg.n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        for k, f in enumerate(bins):
            if lo < f <= mid:
                fb[m, k] = (f - lo) / (mid - lo)
            elif mid < f < hi:
                fb[m, k] = (hi - f) / (hi - mid)
        fb[m] *= 2.0 / (hi - lo)
    mel = fb @ np.stack(frames, axis=1)
    return np.log(np.maximum(mel, cfg.log_floor))


def test_mel_matches_independent_reference():
    w = tone()
    ours = mel_spectrogram(w, CFG).values.astype(np.float64)
    ref = _reference_logmel(w.samples, CFG)
    assert ours.shape == ref.shape
    assert np.max(np.abs(ours - ref)) / np.max(np.abs(ref)) < 1e-4


def test_mfcc_matches_independent_reference():
    w = tone()
    ours = mfcc(w, CFG).frames
    ref_logmel = _reference_logmel(w.samples, CFG)
    ref = dct(ref_logmel, type=2, axis=0, norm="ortho")[1:14].T
    denom = np.max(np.abs(ref))
    assert np.max(np.abs(ours - ref)) / denom < 1e-4


def test_filterbank_covers_band():
    fb = mel_filterbank(CFG)
    assert fb.shape == (80, 513)
    assert (fb >= 0).all()
    assert (fb.sum(axis=1) > 0).all()


@settings(deadline=None, max_examples=20)
@given(gain=st.floats(min_value=1.0, max_value=50.0), seed=st.integers(0, 1000))
def test_mel_monotone_under_gain(gain, seed):
    rng = np.random.default_rng(seed)
    x = 0.01 * rng.standard_normal(2048)
    lo = mel_spectrogram(Waveform(x), CFG).values
    hi = mel_spectrogram(Waveform(np.clip(x * gain, -1, 1)), CFG).values
    assert (hi >= lo - 1e-5).all()


# ---------------------------------------------------------------------------
# mfcc
# ---------------------------------------------------------------------------


def test_mfcc_zero_waveform_constant_frames():
    seq = mfcc(Waveform(np.zeros(4096), 22050), CFG)
    assert seq.frames.shape[1] == 13
    assert np.allclose(seq.frames, seq.frames[0])


def test_mfcc_frame_count_matches_mel():
    w = tone(seconds=0.3)
    assert len(mfcc(w, CFG)) == mel_spectrogram(w, CFG).frames


# ---------------------------------------------------------------------------
# dtw
# ---------------------------------------------------------------------------


def _seq(arr) -> MfccSequence:
    arr = np.asarray(arr, dtype=np.float64)
    frames = np.zeros((len(arr), 13))
    frames[:, 0] = arr
    return MfccSequence(frames)


def test_dtw_identity_is_diagonal():
    a = _seq([1.0, 2.0, 3.0, 4.0])
    path = dtw_align(a, a)
    assert np.array_equal(path.pairs, diagonal_path(4).pairs)
    assert path_cost(a, a, path) == 0.0


def test_dtw_repeat_example():
    x, y = 0.0, 5.0
    a = _seq([x, y])
    b = _seq([x, x, y])
    path = dtw_align(a, b)
    assert [tuple(p) for p in path.pairs] == [(0, 0), (0, 1), (1, 2)]


def test_dtw_cost_symmetry():
    rng = np.random.default_rng(3)
    a = MfccSequence(rng.standard_normal((5, 13)))
    b = MfccSequence(rng.standard_normal((7, 13)))
    ab = path_cost(a, b, dtw_align(a, b))
    ba = path_cost(b, a, dtw_align(b, a))
    assert ab == pytest.approx(ba, abs=1e-12)


def test_dtw_rejects_empty():
    good = _seq([1.0])
    empty = MfccSequence(np.zeros((0, 13)))
    with pytest.raises(ValueError):
        dtw_align(empty, good)
    with pytest.raises(ValueError):
        dtw_align(good, empty)


def _all_monotone_paths(n, m):
    def walk(i, j):
        if (i, j) == (n - 1, m - 1):
            yield [(i, j)]
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                for rest in walk(ni, nj):
                    yield [(i, j)] + rest

    yield from walk(0, 0)


@settings(deadline=None, max_examples=40)
@given(
    n=st.integers(1, 6),
    m=st.integers(1, 6),
    seed=st.integers(0, 10_000),
)
def test_dtw_equals_bruteforce_minimum(n, m, seed):
    rng = np.random.default_rng(seed)
    a = MfccSequence(rng.standard_normal((n, 13)))
    b = MfccSequence(rng.standard_normal((m, 13)))
    got = path_cost(a, b, dtw_align(a, b))
    best = min(
        path_cost(a, b, AlignmentPath(np.asarray(p))) for p in _all_monotone_paths(n, m)
    )
    assert got == pytest.approx(best, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# mcd
# ---------------------------------------------------------------------------


def test_mcd_identity_zero():
    rng = np.random.default_rng(0)
    a = MfccSequence(rng.standard_normal((9, 13)))
    assert mcd(a, a, diagonal_path(9)) == 0.0


def test_mcd_constant_offset_closed_form():
    rng = np.random.default_rng(1)
    base = rng.standard_normal((12, 13))
    delta = 0.37
    shifted = base.copy()
    shifted[:, 4] += delta
    value = mcd(MfccSequence(base), MfccSequence(shifted), diagonal_path(12))
    assert value == pytest.approx(MCD_ALPHA * delta, abs=1e-9)


def test_mcd_bruteforce_five_frames():
    rng = np.random.default_rng(2)
    ref = rng.standard_normal((5, 13))
    syn = rng.standard_normal((5, 13))
    expected = np.mean(
        [MCD_ALPHA * math.sqrt(float(((ref[i] - syn[i]) ** 2).sum())) for i in range(5)]
    )
    got = mcd(MfccSequence(ref), MfccSequence(syn), diagonal_path(5))
    assert got == pytest.approx(expected, rel=1e-12)


def test_mcd_rejects_bad_path():
    rng = np.random.default_rng(3)
    a = MfccSequence(rng.standard_normal((4, 13)))
    b = MfccSequence(rng.standard_normal((3, 13)))
    with pytest.raises(ValueError):
        mcd(a, b, diagonal_path(4))


# ---------------------------------------------------------------------------
# loudness / z-score
# ---------------------------------------------------------------------------


def test_loudness_square_wave_gain():
    square = Waveform(np.where(np.arange(2048) % 2 == 0, 1.0, -1.0), 22050)
    out = normalize_loudness(square, target_db=-21.0)
    expected_gain = 10 ** (-21 / 20)
    assert np.allclose(np.abs(out.samples), expected_gain)
    rms_db = 20 * math.log10(math.sqrt(float(np.mean(out.samples**2))))
    assert abs(rms_db - (-21.0)) < 0.01


def test_loudness_identity_at_target():
    w = tone(amp=0.3)
    at_target = normalize_loudness(w)
    again = normalize_loudness(at_target)
    rms = lambda x: 20 * math.log10(math.sqrt(float(np.mean(x.samples**2))))
    assert abs(rms(again) - rms(at_target)) < 0.01
    assert np.allclose(again.samples, at_target.samples, atol=1e-9)


def test_loudness_rejects_silence():
    with pytest.raises(ValueError):
        normalize_loudness(Waveform(np.zeros(100), 22050))


def test_loudness_clipping_warns():
    spike = np.zeros(4096)
    spike[10] = 1.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = normalize_loudness(Waveform(spike, 22050))
    assert any(isinstance(w.message, ClippingWarning) for w in caught)
    assert np.abs(out.samples).max() <= 1.0


@settings(deadline=None, max_examples=25)
@given(amp=st.floats(0.05, 0.9), freq=st.floats(50, 5000), seed=st.integers(0, 99))
def test_loudness_hits_target(amp, freq, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(4096) / 22050
    w = Waveform(amp * np.sin(2 * np.pi * freq * t) + 0.01 * rng.standard_normal(4096))
    out = normalize_loudness(w, target_db=-21.0)
    rms_db = 20 * math.log10(math.sqrt(float(np.mean(out.samples**2))))
    assert abs(rms_db - (-21.0)) < 0.01


def test_zscore_two_points():
    out = zscore_normalize(Waveform(np.array([1.0, 3.0]), 22050))
    assert np.allclose(out.samples, [-1.0, 1.0])


@settings(deadline=None, max_examples=25)
@given(seed=st.integers(0, 999), scale=st.floats(0.1, 100.0))
def test_zscore_idempotent_and_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    w = Waveform(rng.standard_normal(512))
    once = zscore_normalize(w)
    assert abs(float(np.mean(once.samples))) < 1e-6
    assert abs(float(np.std(once.samples)) - 1.0) < 1e-6
    twice = zscore_normalize(once)
    assert np.max(np.abs(twice.samples - once.samples)) < 1e-6
    scaled = zscore_normalize(Waveform(w.samples * scale))
    assert np.max(np.abs(scaled.samples - once.samples)) < 1e-6


def test_zscore_rejects_degenerate():
    with pytest.raises(ValueError):
        zscore_normalize(Waveform(np.array([5.0]), 22050))
    with pytest.raises(ValueError):
        zscore_normalize(Waveform(np.full(64, 0.25), 22050))


def test_waveform_validation():
    with pytest.raises(ValueError):
        Waveform(np.array([np.nan, 0.0]), 22050)
    with pytest.raises(ValueError):
        Waveform(np.zeros(4), 0)
    with pytest.raises(ValueError):
        Waveform(np.zeros((2, 2)), 22050)
