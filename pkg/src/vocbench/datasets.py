"""Corpus ingestion for an LJSpeech-layout dataset.

A corpus root holds ``metadata.csv`` with ``id|transcript`` lines and the
audio under ``wavs/<id>.wav``. The corpus is used as is: no trimming, no
silence removal, no volume normalization before training.
"""

from __future__ import annotations

import hashlib
import json
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import read_mel_cache, read_wav, write_mel_cache, _atomic_write
from .dsp import MelConfig, MelSpectrogram, Waveform, mel_spectrogram
from .serialization import config_hash

MANIFEST_FORMAT = "vocbench-manifest-v1"
CACHE_INDEX_NAME = "index.json"

TRAIN = "train"
VALIDATION = "validation"


class CorpusError(ValueError):
    """The corpus layout or the requested split is invalid."""


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    audio_path: str
    transcript: str
    duration_samples: int
    split: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    seed: int
    split_sizes: tuple[int, int]
    mel_config_hash: str

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    @property
    def train_entries(self) -> list[ManifestEntry]:
        return self.split(TRAIN)

    @property
    def validation_entries(self) -> list[ManifestEntry]:
        return self.split(VALIDATION)


def build_manifest(
    root_dir: str | Path,
    split_sizes: tuple[int, int] = (12950, 150),
    seed: int = 1234,
    mel_config: MelConfig | None = None,
) -> DatasetManifest:
    """Scan a corpus and deterministically assign train/validation splits.

    Entry ids are shuffled by ``seed``; the validation set is the last
    ``split_sizes[1]`` entries of the shuffled order, so the same seed
    always reproduces the same membership.
    """
    root = Path(root_dir)
    metadata = root / "metadata.csv"
    if not metadata.is_file():
        raise CorpusError(f"{metadata} not found")

    records: list[tuple[str, str, Path]] = []
    seen: set[str] = set()
    for line_no, line in enumerate(metadata.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("|")
        if len(parts) < 2:
            raise CorpusError(f"{metadata}:{line_no}: expected 'id|transcript'")
        utt_id, transcript = parts[0].strip(), parts[1]
        if utt_id in seen:
            raise CorpusError(f"duplicate utterance id {utt_id!r}")
        seen.add(utt_id)
        records.append((utt_id, transcript, root / "wavs" / f"{utt_id}.wav"))

    missing = [str(p) for _, _, p in records if not p.is_file()]
    if missing:
        raise CorpusError(f"{len(missing)} audio files missing, first: {missing[0]}")

    train_n, val_n = split_sizes
    if train_n < 0 or val_n < 0 or train_n + val_n > len(records):
        raise CorpusError(
            f"split sizes {split_sizes} do not fit a corpus of {len(records)} entries"
        )

    order = np.random.default_rng(seed).permutation(len(records))
    val_idx = set(order[len(records) - val_n :].tolist())
    train_idx = set(order[:train_n].tolist())

    entries = []
    for i, (utt_id, transcript, path) in enumerate(records):
        if i in train_idx:
            split = TRAIN
        elif i in val_idx:
            split = VALIDATION
        else:
            continue
        entries.append(
            ManifestEntry(
                utterance_id=utt_id,
                audio_path=str(path),
                transcript=transcript,
                duration_samples=_wav_duration(path),
                split=split,
            )
        )
    entries.sort(key=lambda e: e.utterance_id)
    mel_cfg = mel_config if mel_config is not None else MelConfig()
    return DatasetManifest(
        entries=entries,
        seed=seed,
        split_sizes=(train_n, val_n),
        mel_config_hash=config_hash(mel_cfg),
    )


def _wav_duration(path: Path) -> int:
    try:
        with wave.open(str(path), "rb") as f:
            return f.getnframes()
    except (OSError, wave.Error) as exc:
        raise CorpusError(f"unreadable audio header in {path}: {exc}") from exc


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    header = {
        "format": MANIFEST_FORMAT,
        "seed": manifest.seed,
        "split_sizes": list(manifest.split_sizes),
        "mel_config_hash": manifest.mel_config_hash,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for e in manifest.entries:
        lines.append(
            json.dumps(
                {
                    "id": e.utterance_id,
                    "audio_path": e.audio_path,
                    "transcript": e.transcript,
                    "duration_samples": e.duration_samples,
                    "split": e.split,
                },
                sort_keys=True,
            )
        )
    text = "\n".join(lines) + "\n"
    _atomic_write(path, lambda tmp: Path(tmp).write_text(text, encoding="utf-8"))


def load_manifest(path: str | Path) -> DatasetManifest:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("format") != MANIFEST_FORMAT:
        raise CorpusError(f"{path}: unknown manifest format {header.get('format')!r}")
    entries = []
    for line in lines[1:]:
        if not line.strip():
            continue
        d = json.loads(line)
        entries.append(
            ManifestEntry(
                utterance_id=d["id"],
                audio_path=d["audio_path"],
                transcript=d["transcript"],
                duration_samples=d["duration_samples"],
                split=d["split"],
            )
        )
    return DatasetManifest(
        entries=entries,
        seed=header["seed"],
        split_sizes=tuple(header["split_sizes"]),
        mel_config_hash=header["mel_config_hash"],
    )


# ---------------------------------------------------------------------------
# mel cache
# ---------------------------------------------------------------------------


@dataclass
class CacheIndex:
    """Per-utterance mel cache with content hashes for idempotent rebuilds."""

    directory: str
    config_hash: str
    entries: dict[str, dict] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    recomputed: int = 0

    def mel_path(self, utterance_id: str) -> Path:
        return Path(self.directory) / f"{utterance_id}.mel"

    def load_mel(self, utterance_id: str) -> np.ndarray:
        if utterance_id not in self.entries:
            raise KeyError(f"utterance {utterance_id!r} not in mel cache")
        return read_mel_cache(self.mel_path(utterance_id))


def _audio_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cache_mels(
    manifest: DatasetManifest,
    cfg: MelConfig,
    out_dir: str | Path,
) -> CacheIndex:
    """Compute and store one MEL1 file per utterance.

    A second run over the same corpus recomputes nothing: entries are
    skipped while their audio digest and mel config hash still match.
    Unreadable files are reported per utterance without aborting the rest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_hash = config_hash(cfg)

    previous: dict[str, dict] = {}
    index_path = out / CACHE_INDEX_NAME
    if index_path.is_file():
        stored = json.loads(index_path.read_text(encoding="utf-8"))
        if stored.get("config_hash") == cfg_hash:
            previous = stored.get("entries", {})

    index = CacheIndex(directory=str(out), config_hash=cfg_hash)
    for entry in manifest.entries:
        utt = entry.utterance_id
        try:
            digest = _audio_digest(entry.audio_path)
            mel_file = index.mel_path(utt)
            prior = previous.get(utt)
            if prior and prior["audio_sha256"] == digest and mel_file.is_file():
                index.entries[utt] = prior
                continue
            w = read_wav(entry.audio_path, expect_sample_rate=cfg.sample_rate)
            mel = mel_spectrogram(w, cfg)
            write_mel_cache(mel_file, mel.values)
            index.entries[utt] = {
                "audio_sha256": digest,
                "frames": mel.frames,
                "duration_samples": len(w),
            }
            index.recomputed += 1
        except Exception as exc:  # noqa: BLE001 - per-file isolation is the contract
            index.errors[utt] = f"{type(exc).__name__}: {exc}"

    payload = {
        "format": "vocbench-melcache-v1",
        "config_hash": cfg_hash,
        "entries": index.entries,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _atomic_write(index_path, lambda tmp: Path(tmp).write_text(text, encoding="utf-8"))
    return index


def load_cache_index(cache_dir: str | Path) -> CacheIndex:
    path = Path(cache_dir) / CACHE_INDEX_NAME
    stored = json.loads(path.read_text(encoding="utf-8"))
    return CacheIndex(
        directory=str(cache_dir),
        config_hash=stored["config_hash"],
        entries=stored["entries"],
    )


# ---------------------------------------------------------------------------
# training segments
# ---------------------------------------------------------------------------


@dataclass
class Utterance:
    """One corpus item with its audio and cached full-length mel."""

    utterance_id: str
    audio: Waveform
    mel: np.ndarray


@dataclass
class TrainingSegment:
    """Fixed-length crop with hop-aligned audio and mel windows."""

    audio: np.ndarray
    mel: np.ndarray
    source_id: str

    def __post_init__(self):
        hop_aligned = self.mel.shape[1] > 0 and self.audio.shape[0] % self.mel.shape[1] == 0
        if not hop_aligned:
            raise ValueError(
                f"segment audio ({self.audio.shape[0]}) does not align with "
                f"{self.mel.shape[1]} mel frames"
            )


def load_utterance(entry: ManifestEntry, cache: CacheIndex, cfg: MelConfig) -> Utterance:
    return Utterance(
        utterance_id=entry.utterance_id,
        audio=read_wav(entry.audio_path, expect_sample_rate=cfg.sample_rate),
        mel=cache.load_mel(entry.utterance_id),
    )


def sample_segment(
    utterance: Utterance,
    segment_samples: int,
    rng: np.random.Generator,
    cfg: MelConfig,
) -> TrainingSegment:
    """Crop a hop-aligned training segment; short utterances are zero-padded.

    The crop starts on a mel-frame boundary so the audio window and the
    mel slice describe exactly the same span: ``segment_samples`` audio
    samples against ``segment_samples / hop`` cached frames.
    """
    if segment_samples % cfg.hop_size != 0:
        raise ValueError("segment_samples must be a multiple of hop_size")
    frames = segment_samples // cfg.hop_size
    audio = utterance.audio.samples

    if len(audio) < segment_samples:
        padded = np.zeros(segment_samples, dtype=audio.dtype)
        padded[: len(audio)] = audio
        mel = mel_spectrogram(Waveform(padded, cfg.sample_rate), cfg).values[:, :frames]
        return TrainingSegment(audio=padded, mel=mel, source_id=utterance.utterance_id)

    max_start_frame = (len(audio) - segment_samples) // cfg.hop_size
    start_frame = int(rng.integers(0, max_start_frame + 1))
    start = start_frame * cfg.hop_size
    return TrainingSegment(
        audio=audio[start : start + segment_samples].copy(),
        mel=utterance.mel[:, start_frame : start_frame + frames].copy(),
        source_id=utterance.utterance_id,
    )
