"""The quantitative pipeline: synthesis with timing, MCD reports, listening
test-set assembly and the model-summary benchmark table.

MCD protocol: every clip is z-score normalized first, both signals become
13-coefficient MFCC sequences, ground-truth-based pairs align on the
(trimmed) diagonal while TTS-based pairs are warped by DTW, and the report
averages per-utterance distortions with a normal-approximation 95%
interval across utterances.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .audio_io import write_wav
from .dsp import (
    MelConfig,
    Waveform,
    diagonal_path,
    dtw_align,
    mcd,
    mfcc,
    normalize_loudness,
    zscore_normalize,
)
from .generators import GeneratorKind, draw_noise

GT_MODE = "GT"
TTS_MODE = "TTS"

MOS_SYNTH_UTTERANCES = 20
MOS_ORIGINALS = 100
MOS_TOTAL = 340

INPUT_TYPE_LABELS = {
    GeneratorKind.HIFIGAN_V2: "Mel spectrogram",
    GeneratorKind.MELGAN: "Mel spectrogram",
    GeneratorKind.UMGAN: "Mel spectrogram",
    GeneratorKind.VOCGAN: "Mel spectrogram",
    GeneratorKind.PWGAN: "Gaussian noise (+ mel)",
    GeneratorKind.PROPOSED: "Gaussian noise (+ mel)",
}


class EvaluationError(ValueError):
    pass


@dataclass
class UtteranceScore:
    utterance_id: str
    mcd_db: float
    seconds: float | None = None
    path_len: int | None = None


@dataclass
class EvalReport:
    per_utterance: list[UtteranceScore]
    mean_mcd: float
    ci95: float
    mode: str


@dataclass
class MosItem:
    slot_id: str
    source: str
    utterance_id: str
    audio_path: str


@dataclass
class MosManifest:
    items: list[MosItem]
    shuffle_seed: int


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


@torch.no_grad()
def synthesize_set(
    generator: torch.nn.Module,
    mels: list[np.ndarray],
    seed: int = 0,
    device: str = "cpu",
    sample_rate: int = 22050,
) -> tuple[list[Waveform], list[float]]:
    """Vocode a list of mel matrices, timing each forward pass.

    The first mel is synthesized once extra as an uncounted warm-up, and
    the timer brackets only the generator call, never disk I/O.
    """
    if not mels:
        raise EvaluationError("no mel spectrograms to synthesize")
    generator.eval()
    cfg = generator.config
    rng = torch.Generator()
    rng.manual_seed(seed)

    def prepare(mel_values: np.ndarray):
        mel = torch.from_numpy(mel_values.astype(np.float32)).unsqueeze(0).to(device)
        noise = draw_noise(cfg, 1, mel.size(2), rng, device)
        return mel, noise

    warm_mel, warm_noise = prepare(mels[0])
    generator(warm_mel, warm_noise)

    waveforms: list[Waveform] = []
    seconds: list[float] = []
    for values in mels:
        mel, noise = prepare(values)
        begin = time.perf_counter()
        wav = generator(mel, noise)
        seconds.append(time.perf_counter() - begin)
        samples = wav.squeeze(0).squeeze(0).cpu().numpy().astype(np.float64)
        waveforms.append(Waveform(np.clip(samples, -1.0, 1.0), sample_rate))
    return waveforms, seconds


# ---------------------------------------------------------------------------
# MCD report
# ---------------------------------------------------------------------------


def mcd_report(
    ref_audios: list[Waveform],
    syn_audios: list[Waveform],
    mode: str,
    cfg: MelConfig | None = None,
    utterance_ids: list[str] | None = None,
    seconds: list[float] | None = None,
) -> EvalReport:
    """Per-utterance mel cepstral distortion with a 95% interval.

    GT mode trims both MFCC sequences to the shorter length and uses the
    diagonal path; TTS mode warps the synthesis onto its reference by DTW.
    """
    if mode not in (GT_MODE, TTS_MODE):
        raise EvaluationError(f"mode must be {GT_MODE} or {TTS_MODE}, got {mode!r}")
    if len(ref_audios) != len(syn_audios) or not ref_audios:
        raise EvaluationError(
            f"need matching non-empty lists, got {len(ref_audios)} refs / {len(syn_audios)} syntheses"
        )
    cfg = cfg if cfg is not None else MelConfig()
    ids = utterance_ids or [f"utt_{i:04d}" for i in range(len(ref_audios))]

    scores: list[UtteranceScore] = []
    for i, (ref, syn) in enumerate(zip(ref_audios, syn_audios)):
        ref_mfcc = mfcc(zscore_normalize(ref), cfg)
        syn_mfcc = mfcc(zscore_normalize(syn), cfg)
        if mode == GT_MODE:
            n = min(len(ref_mfcc), len(syn_mfcc))
            ref_mfcc.frames = ref_mfcc.frames[:n]
            syn_mfcc.frames = syn_mfcc.frames[:n]
            path = diagonal_path(n)
        else:
            path = dtw_align(ref_mfcc, syn_mfcc)
        scores.append(
            UtteranceScore(
                utterance_id=ids[i],
                mcd_db=mcd(ref_mfcc, syn_mfcc, path),
                seconds=seconds[i] if seconds else None,
                path_len=len(path),
            )
        )

    values = np.asarray([s.mcd_db for s in scores])
    mean = float(values.mean())
    ci95 = 0.0
    if len(values) > 1:
        ci95 = float(1.96 * values.std(ddof=1) / math.sqrt(len(values)))
    return EvalReport(per_utterance=scores, mean_mcd=mean, ci95=ci95, mode=mode)


def write_eval_csv(report: EvalReport, path: str | Path, config_stamp: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if config_stamp:
            f.write(f"# config_hash={config_stamp} mode={report.mode}\n")
        writer = csv.writer(f)
        writer.writerow(["utterance_id", "mcd_db", "seconds", "path_len"])
        for s in report.per_utterance:
            writer.writerow(
                [
                    s.utterance_id,
                    f"{s.mcd_db:.6f}",
                    "" if s.seconds is None else f"{s.seconds:.6f}",
                    "" if s.path_len is None else s.path_len,
                ]
            )
        writer.writerow(["mean", f"{report.mean_mcd:.6f}", "", ""])
        writer.writerow(["ci95", f"{report.ci95:.6f}", "", ""])


# ---------------------------------------------------------------------------
# listening test set
# ---------------------------------------------------------------------------


def assemble_mos_set(
    vocoder_outputs: dict[str, dict[str, dict[str, str | Path]]],
    originals_pool: dict[str, str | Path],
    out_dir: str | Path,
    seed: int = 0,
    target_db: float = -21.0,
    sample_rate: int = 22050,
    read_audio=None,
) -> MosManifest:
    """Build the 340-item listening set: 240 syntheses plus 100 originals.

    ``vocoder_outputs[kind][mode]`` maps each of the 20 shared utterance
    ids to an audio path for all six kinds and both modes. The originals
    for those 20 utterances enter first; 80 more are drawn at random from
    the rest of the pool. Every clip is loudness-normalized and rewritten
    under ``out_dir`` in a seed-shuffled slot order.
    """
    from .audio_io import read_wav

    reader = read_audio if read_audio is not None else (
        lambda p: read_wav(p, expect_sample_rate=sample_rate)
    )

    kinds = sorted(vocoder_outputs)
    if len(kinds) != len(GeneratorKind):
        raise EvaluationError(
            f"expected outputs for all {len(GeneratorKind)} kinds, got {len(kinds)}"
        )
    shared_ids: set[str] | None = None
    for kind in kinds:
        modes = vocoder_outputs[kind]
        if set(modes) != {GT_MODE, TTS_MODE}:
            raise EvaluationError(f"{kind}: need both {GT_MODE} and {TTS_MODE} outputs")
        for mode, files in modes.items():
            if len(files) != MOS_SYNTH_UTTERANCES:
                raise EvaluationError(
                    f"{kind}/{mode}: expected {MOS_SYNTH_UTTERANCES} files, got {len(files)}"
                )
            ids = set(files)
            shared_ids = ids if shared_ids is None else shared_ids
            if ids != shared_ids:
                raise EvaluationError(f"{kind}/{mode}: utterance ids differ across sources")

    missing = sorted(shared_ids - set(originals_pool))
    if missing:
        raise EvaluationError(f"originals pool lacks synthesis utterances: {missing[:5]}")

    remaining = sorted(set(originals_pool) - shared_ids)
    extra_needed = MOS_ORIGINALS - len(shared_ids)
    if len(remaining) < extra_needed:
        raise EvaluationError(
            f"originals pool too small: need {extra_needed} beyond the synthesis "
            f"sentences, have {len(remaining)}"
        )
    rng = np.random.default_rng(seed)
    extras = [remaining[i] for i in rng.choice(len(remaining), size=extra_needed, replace=False)]

    entries: list[tuple[str, str, str | Path]] = []
    for kind in kinds:
        for mode in (GT_MODE, TTS_MODE):
            for utt_id in sorted(vocoder_outputs[kind][mode]):
                entries.append((f"{kind}_{mode}", utt_id, vocoder_outputs[kind][mode][utt_id]))
    for utt_id in sorted(shared_ids) + sorted(extras):
        entries.append(("original", utt_id, originals_pool[utt_id]))
    assert len(entries) == MOS_TOTAL

    order = rng.permutation(len(entries))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items: list[MosItem] = []
    for slot, idx in enumerate(order):
        source, utt_id, src_path = entries[int(idx)]
        slot_id = f"slot_{slot:03d}"
        dst = out / f"{slot_id}.wav"
        write_wav(dst, normalize_loudness(reader(src_path), target_db))
        items.append(
            MosItem(slot_id=slot_id, source=source, utterance_id=utt_id, audio_path=str(dst))
        )
    return MosManifest(items=items, shuffle_seed=seed)


def write_mos_manifest(manifest: MosManifest, csv_path: str | Path, key_path: str | Path) -> None:
    """Public rating sheet (slot, audio) plus the hidden slot-to-source key."""
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["slot_id", "audio_path"])
        for item in manifest.items:
            writer.writerow([item.slot_id, item.audio_path])
    with open(key_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["slot_id", "source", "utterance_id"])
        for item in manifest.items:
            writer.writerow([item.slot_id, item.source, item.utterance_id])


# ---------------------------------------------------------------------------
# benchmark table
# ---------------------------------------------------------------------------


@dataclass
class BenchmarkRow:
    kind: str
    params: int
    s_per_batch: float | None
    s_per_sample: float | None
    input_type: str


def benchmark_rows(
    generators: list[torch.nn.Module],
    mels: list[np.ndarray],
    train_log_records: dict[str, list[dict]] | None = None,
    seed: int = 0,
    device: str = "cpu",
) -> list[BenchmarkRow]:
    """Per-kind summary rows: parameters, measured speeds, input type.

    Training speed comes from metric logs when provided; a missing log
    leaves the cell empty rather than inventing a number.
    """
    rows = []
    for generator in generators:
        kind = generator.config.kind
        _, seconds = synthesize_set(generator, mels, seed=seed, device=device)
        s_per_batch = None
        records = (train_log_records or {}).get(kind.value)
        if records:
            times = [r["seconds_per_batch"] for r in records if r.get("type") == "train"]
            if times:
                s_per_batch = float(np.mean(times))
        rows.append(
            BenchmarkRow(
                kind=kind.value,
                params=sum(p.numel() for p in generator.parameters() if p.requires_grad),
                s_per_batch=s_per_batch,
                s_per_sample=float(np.mean(seconds)),
                input_type=INPUT_TYPE_LABELS[kind],
            )
        )
    return rows


def write_benchmark_csv(rows: list[BenchmarkRow], path: str | Path, config_stamp: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if config_stamp:
            f.write(f"# config_hash={config_stamp}\n")
        writer = csv.writer(f)
        writer.writerow(["kind", "params", "s_per_batch", "s_per_sample", "input_type"])
        for row in rows:
            writer.writerow(
                [
                    row.kind,
                    row.params,
                    "unavailable" if row.s_per_batch is None else f"{row.s_per_batch:.6f}",
                    "unavailable" if row.s_per_sample is None else f"{row.s_per_sample:.6f}",
                    row.input_type,
                ]
            )
