#!/usr/bin/env python3
"""Generate the deterministic 10-utterance fixture corpus used by CI.

Each clip is 2 seconds of seeded harmonic content (a few partials with
slow amplitude modulation over a noise floor) in the LJSpeech layout:
metadata.csv plus wavs/<id>.wav, 16-bit PCM mono 22050 Hz.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vocbench.audio_io import write_wav
from vocbench.dsp import Waveform

SAMPLE_RATE = 22050
DURATION_S = 2.0
N_UTTERANCES = 10


def synth_clip(index: int) -> np.ndarray:
    rng = np.random.default_rng(1000 + index)
    n = int(SAMPLE_RATE * DURATION_S)
    t = np.arange(n) / SAMPLE_RATE
    f0 = rng.uniform(110.0, 330.0)
    clip = np.zeros(n)
    for harmonic in range(1, 5):
        amp = rng.uniform(0.1, 0.5) / harmonic
        mod = 1.0 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 6.28))
        clip += amp * mod * np.sin(2 * np.pi * f0 * harmonic * t + rng.uniform(0, 6.28))
    clip += 0.01 * rng.standard_normal(n)
    clip *= 0.5 / np.abs(clip).max()
    return clip


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "out_dir",
        nargs="?",
        default=Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "corpus",
        type=Path,
    )
    args = parser.parse_args()

    wav_dir = args.out_dir / "wavs"
    wav_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(N_UTTERANCES):
        utt_id = f"FX{i:03d}"
        write_wav(wav_dir / f"{utt_id}.wav", Waveform(synth_clip(i), SAMPLE_RATE))
        lines.append(f"{utt_id}|synthetic fixture utterance number {i}")
    (args.out_dir / "metadata.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {N_UTTERANCES} utterances under {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
