"""File formats: 16-bit PCM WAV and the binary mel cache.

Mel cache layout ("MEL1"): 4 magic bytes, little-endian u32 band count,
u32 frame count, then bands * frames little-endian f32 values in
band-major order.
"""

from __future__ import annotations

import math
import os
import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .dsp import Waveform

MEL_MAGIC = b"MEL1"


class AudioFormatError(ValueError):
    """Input audio does not match the 16-bit mono PCM contract."""


def read_wav(
    path: str | Path,
    expect_sample_rate: int = 22050,
    resample: bool = False,
) -> Waveform:
    """Read a 16-bit mono PCM WAV file as a float waveform in [-1, 1].

    Files at a different sample rate are rejected unless ``resample`` is
    set, in which case a polyphase resampler converts them.
    """
    rate, data = wavfile.read(str(path))
    if data.dtype != np.int16:
        raise AudioFormatError(f"{path}: expected 16-bit PCM, got dtype {data.dtype}")
    if data.ndim != 1:
        raise AudioFormatError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    samples = data.astype(np.float64) / 32768.0
    if rate != expect_sample_rate:
        if not resample:
            raise AudioFormatError(
                f"{path}: sample rate {rate} != {expect_sample_rate} "
                "(pass resample=True to convert)"
            )
        g = math.gcd(rate, expect_sample_rate)
        samples = resample_poly(samples, expect_sample_rate // g, rate // g)
        samples = np.clip(samples, -1.0, 1.0)
    return Waveform(samples, expect_sample_rate)


def write_wav(path: str | Path, w: Waveform) -> None:
    """Write a waveform as 16-bit mono PCM, clipping to full scale."""
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype(np.int16)
    _atomic_write(path, lambda tmp: wavfile.write(tmp, w.sample_rate, pcm))


def write_mel_cache(path: str | Path, values: np.ndarray) -> None:
    """Write a (bands, frames) mel matrix in the MEL1 layout."""
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D mel matrix, got shape {values.shape}")
    header = MEL_MAGIC + struct.pack("<II", values.shape[0], values.shape[1])

    def write(tmp: str) -> None:
        with open(tmp, "wb") as f:
            f.write(header)
            f.write(values.tobytes())

    _atomic_write(path, write)


def read_mel_cache(path: str | Path) -> np.ndarray:
    """Read a MEL1 file back into a float32 (bands, frames) matrix."""
    with open(path, "rb") as f:
        head = f.read(12)
        if len(head) != 12 or head[:4] != MEL_MAGIC:
            raise ValueError(f"{path}: not a MEL1 file")
        n_mels, frames = struct.unpack("<II", head[4:])
        payload = f.read(4 * n_mels * frames)
    if len(payload) != 4 * n_mels * frames:
        raise ValueError(f"{path}: truncated MEL1 payload")
    return np.frombuffer(payload, dtype="<f4").reshape(n_mels, frames).copy()


def _atomic_write(path: str | Path, write_fn) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        write_fn(str(tmp))
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
