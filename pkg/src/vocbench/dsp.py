"""Signal-processing kernels shared by training and evaluation.

All functions here are pure: they read their arguments, allocate fresh
outputs and never touch shared mutable state, so they are safe to call
from any number of worker processes.

The mel front-end (1024-point FFT, 1024 window, 256 hop, 80 bands) is the
single framing pipeline for everything downstream: generator conditioning,
the reconstruction loss and the cepstral distance all derive from it.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from scipy.fft import dct
from scipy.spatial.distance import cdist

#: Cepstral-distance scale 10 * sqrt(2) / ln(10), the common dB convention.
MCD_ALPHA = 10.0 * math.sqrt(2.0) / math.log(10.0)

#: Number of cepstral coefficients kept (c1..c13, c0 dropped).
MCD_COEFFS = 13


class ClippingWarning(UserWarning):
    """Raised when loudness normalization clips samples into [-1, 1]."""


@dataclass(frozen=True)
class MelConfig:
    """Parameters of the log-mel front-end."""

    n_fft: int = 1024
    win_size: int = 1024
    hop_size: int = 256
    n_mels: int = 80
    sample_rate: int = 22050
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-5

    def __post_init__(self):
        if not (0 < self.hop_size <= self.win_size <= self.n_fft):
            raise ValueError(
                f"need hop_size <= win_size <= n_fft, got "
                f"{self.hop_size}/{self.win_size}/{self.n_fft}"
            )
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if not (0 <= self.fmin < self.fmax <= self.sample_rate / 2):
            raise ValueError(
                f"need 0 <= fmin < fmax <= sample_rate/2, got "
                f"fmin={self.fmin} fmax={self.fmax} sr={self.sample_rate}"
            )
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    def frame_count(self, n_samples: int) -> int:
        """Frame count of centered framing: floor(n / hop) + 1."""
        return n_samples // self.hop_size + 1


@dataclass
class Waveform:
    """Mono audio signal with its sample rate."""

    samples: np.ndarray
    sample_rate: int = 22050

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"expected mono 1-D samples, got shape {self.samples.shape}")
        if self.samples.size and not np.isfinite(self.samples).all():
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class MelSpectrogram:
    """Log-mel magnitude matrix, shape (n_mels, frames)."""

    values: np.ndarray
    config: MelConfig

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2 or self.values.shape[0] != self.config.n_mels:
            raise ValueError(
                f"expected ({self.config.n_mels}, T) values, got {self.values.shape}"
            )

    @property
    def frames(self) -> int:
        return self.values.shape[1]


@dataclass
class MfccSequence:
    """Cepstral coefficients c1..c13 per frame, shape (frames, 13)."""

    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[1] != MCD_COEFFS:
            raise ValueError(f"expected (T, {MCD_COEFFS}) frames, got {self.frames.shape}")
        if self.frames.size and not np.isfinite(self.frames).all():
            raise ValueError("MFCC frames contain non-finite values")

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass
class AlignmentPath:
    """Monotone index pairs aligning two sequences end to end."""

    pairs: np.ndarray

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64)
        if self.pairs.ndim != 2 or self.pairs.shape[1] != 2:
            raise ValueError(f"expected (L, 2) pairs, got {self.pairs.shape}")
        if self.pairs.shape[0] == 0:
            raise ValueError("alignment path is empty")
        steps = np.diff(self.pairs, axis=0)
        if steps.size and not (
            (steps >= 0).all() and (steps <= 1).all() and (steps.sum(axis=1) >= 1).all()
        ):
            raise ValueError("path steps must increment i, j or both by 1")

    def __len__(self) -> int:
        return self.pairs.shape[0]


def diagonal_path(length: int) -> AlignmentPath:
    """The trivial (i, i) alignment for equal-length sequences."""
    if length < 1:
        raise ValueError("diagonal path needs length >= 1")
    idx = np.arange(length, dtype=np.int64)
    return AlignmentPath(np.stack([idx, idx], axis=1))


# ---------------------------------------------------------------------------
# mel filterbank / spectrogram
# ---------------------------------------------------------------------------


def _hz_to_mel(freq: np.ndarray) -> np.ndarray:
    # Slaney-style scale: linear below 1 kHz, logarithmic above.
    freq = np.asarray(freq, dtype=np.float64)
    f_sp = 200.0 / 3.0
    min_log_hz = 1000.0
    logstep = math.log(6.4) / 27.0
    linear = freq / f_sp
    with np.errstate(divide="ignore"):
        logpart = min_log_hz / f_sp + np.log(np.maximum(freq, min_log_hz) / min_log_hz) / logstep
    return np.where(freq >= min_log_hz, logpart, linear)


def _mel_to_hz(mel: np.ndarray) -> np.ndarray:
    mel = np.asarray(mel, dtype=np.float64)
    f_sp = 200.0 / 3.0
    min_log_mel = 1000.0 / f_sp
    logstep = math.log(6.4) / 27.0
    linear = mel * f_sp
    logpart = 1000.0 * np.exp(logstep * (mel - min_log_mel))
    return np.where(mel >= min_log_mel, logpart, linear)


@functools.lru_cache(maxsize=8)
def mel_filterbank(cfg: MelConfig) -> np.ndarray:
    """Triangular, area-normalized mel filterbank (n_mels, n_fft // 2 + 1)."""
    n_bins = cfg.n_fft // 2 + 1
    fft_freqs = np.linspace(0.0, cfg.sample_rate / 2.0, n_bins)
    mel_pts = np.linspace(_hz_to_mel(cfg.fmin), _hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)

    fdiff = np.diff(hz_pts)
    ramps = hz_pts[:, None] - fft_freqs[None, :]
    lower = -ramps[:-2] / fdiff[:-1, None]
    upper = ramps[2:] / fdiff[1:, None]
    weights = np.maximum(0.0, np.minimum(lower, upper))

    # normalize each triangle to unit area in Hz
    enorm = 2.0 / (hz_pts[2 : cfg.n_mels + 2] - hz_pts[:cfg.n_mels])
    return (weights * enorm[:, None]).astype(np.float64)


@functools.lru_cache(maxsize=8)
def _mel_basis_torch(cfg: MelConfig, dtype: torch.dtype) -> torch.Tensor:
    return torch.from_numpy(mel_filterbank(cfg)).to(dtype)


def mel_spectrogram_torch(audio: torch.Tensor, cfg: MelConfig) -> torch.Tensor:
    """Differentiable log-mel of a batch of signals.

    Args:
        audio: (batch, samples) tensor, any float dtype.
        cfg: mel front-end parameters.

    Returns:
        (batch, n_mels, floor(samples / hop) + 1) log-mel tensor.
    """
    if audio.ndim != 2:
        raise ValueError(f"expected (batch, samples) audio, got shape {tuple(audio.shape)}")
    if audio.size(1) == 0:
        raise ValueError("empty audio")
    pad = cfg.n_fft // 2
    x = audio.unsqueeze(1)
    # centered framing; reflection needs len > pad, degenerate inputs fall back to zeros
    mode = "reflect" if audio.size(1) > pad else "constant"
    x = F.pad(x, (pad, pad), mode=mode).squeeze(1)
    window = torch.hann_window(cfg.win_size, dtype=audio.dtype, device=audio.device)
    spec = torch.stft(
        x,
        cfg.n_fft,
        hop_length=cfg.hop_size,
        win_length=cfg.win_size,
        window=window,
        center=False,
        onesided=True,
        return_complex=True,
    )
    magnitude = spec.abs()
    basis = _mel_basis_torch(cfg, audio.dtype).to(audio.device)
    mel = torch.matmul(basis, magnitude)
    return torch.log(torch.clamp(mel, min=cfg.log_floor))


def mel_spectrogram(w: Waveform, cfg: MelConfig) -> MelSpectrogram:
    """Log-mel spectrogram of a waveform, floor(len / hop) + 1 frames."""
    _check_mel_input(w, cfg)
    with torch.no_grad():
        # double precision here; float32 is for the differentiable batch path
        audio = torch.from_numpy(w.samples).unsqueeze(0)
        values = mel_spectrogram_torch(audio, cfg).squeeze(0).numpy()
    return MelSpectrogram(values=values, config=cfg)


def mfcc(w: Waveform, cfg: MelConfig) -> MfccSequence:
    """MFCC via orthonormal DCT-II of the log-mel frames; c0 is dropped."""
    logmel = mel_spectrogram(w, cfg).values.astype(np.float64)
    coeffs = dct(logmel, type=2, axis=0, norm="ortho")
    return MfccSequence(frames=coeffs[1 : MCD_COEFFS + 1].T.copy())


def _check_mel_input(w: Waveform, cfg: MelConfig) -> None:
    if len(w) == 0:
        raise ValueError("cannot compute a spectrogram of empty audio")
    if w.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"waveform sample rate {w.sample_rate} != config rate {cfg.sample_rate}"
        )


# ---------------------------------------------------------------------------
# alignment and distortion
# ---------------------------------------------------------------------------

_DIAG, _STEP_I, _STEP_J = 0, 1, 2


def dtw_align(a: MfccSequence, b: MfccSequence) -> AlignmentPath:
    """Minimum-cost monotone alignment of two MFCC sequences.

    Steps are (1,1), (1,0) and (0,1) over Euclidean frame distances; ties
    prefer the diagonal, then the i-step, so the path is deterministic.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("cannot align an empty sequence")
    dist = cdist(a.frames, b.frames, metric="euclidean")
    n, m = dist.shape
    acc = np.empty((n, m), dtype=np.float64)
    move = np.zeros((n, m), dtype=np.int8)
    acc[0, 0] = dist[0, 0]
    for j in range(1, m):
        acc[0, j] = acc[0, j - 1] + dist[0, j]
        move[0, j] = _STEP_J
    for i in range(1, n):
        acc[i, 0] = acc[i - 1, 0] + dist[i, 0]
        move[i, 0] = _STEP_I
        prev = acc[i - 1]
        cur = acc[i]
        row = dist[i]
        mrow = move[i]
        for j in range(1, m):
            best = prev[j - 1]
            mv = _DIAG
            up = prev[j]
            if up < best:
                best = up
                mv = _STEP_I
            left = cur[j - 1]
            if left < best:
                best = left
                mv = _STEP_J
            cur[j] = best + row[j]
            mrow[j] = mv

    pairs = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        mv = move[i, j]
        if mv == _DIAG:
            i, j = i - 1, j - 1
        elif mv == _STEP_I:
            i -= 1
        else:
            j -= 1
        pairs.append((i, j))
    pairs.reverse()
    return AlignmentPath(np.asarray(pairs, dtype=np.int64))


def path_cost(a: MfccSequence, b: MfccSequence, path: AlignmentPath) -> float:
    """Cumulative Euclidean frame distance along an alignment path."""
    d = a.frames[path.pairs[:, 0]] - b.frames[path.pairs[:, 1]]
    return float(np.sqrt((d * d).sum(axis=1)).sum())


def mcd(ref: MfccSequence, syn: MfccSequence, path: AlignmentPath) -> float:
    """Mel cepstral distortion in dB, averaged over the alignment path."""
    if path.pairs[:, 0].max() >= len(ref) or path.pairs[:, 1].max() >= len(syn):
        raise ValueError("alignment path indexes beyond the sequences")
    d = ref.frames[path.pairs[:, 0]] - syn.frames[path.pairs[:, 1]]
    per_frame = np.sqrt((d * d).sum(axis=1))
    return float(MCD_ALPHA * per_frame.mean())


# ---------------------------------------------------------------------------
# level normalizations
# ---------------------------------------------------------------------------


def normalize_loudness(w: Waveform, target_db: float = -21.0) -> Waveform:
    """Scale a waveform so its RMS level in dBFS equals ``target_db``.

    The output is clipped to [-1, 1]; if any sample clips, a
    ``ClippingWarning`` reports the clipped fraction.
    """
    x = w.samples
    rms = math.sqrt(float(np.mean(x * x))) if len(w) else 0.0
    if rms == 0.0:
        raise ValueError("cannot normalize loudness of silent audio")
    gain = 10.0 ** ((target_db - 20.0 * math.log10(rms)) / 20.0)
    y = x * gain
    over = np.abs(y) > 1.0
    if over.any():
        fraction = float(over.mean())
        warnings.warn(
            ClippingWarning(f"loudness normalization clipped {fraction:.3%} of samples")
        )
        y = np.clip(y, -1.0, 1.0)
    return Waveform(y, w.sample_rate)


def zscore_normalize(w: Waveform) -> Waveform:
    """Shift and scale to zero mean and unit population standard deviation."""
    if len(w) < 2:
        raise ValueError("z-score normalization needs at least 2 samples")
    mean = float(np.mean(w.samples))
    std = float(np.std(w.samples))
    if std == 0.0:
        raise ValueError("cannot z-score a constant signal (zero variance)")
    return Waveform((w.samples - mean) / std, w.sample_rate)
