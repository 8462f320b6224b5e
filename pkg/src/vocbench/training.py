"""Loss composition, optimizer schedule and the adversarial training loop.

Protocol per step: update the discriminator on (real, detached fake) with
the least-squares objective, then update the generator on freshly computed
discriminator outputs with adversarial + feature-matching + mel-L1 terms.
AdamW drives both sides; the learning rate decays by a fixed factor once
per epoch, an epoch being one pass over the training utterances at one
random segment each.

All per-step randomness is derived from (seed, step), so a run is a pure
function of its config and checkpoint resume is bit-identical.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .datasets import (
    CacheIndex,
    DatasetManifest,
    ManifestEntry,
    TrainingSegment,
    Utterance,
    load_utterance,
    sample_segment,
)
from .discriminators import (
    DiscriminatorConfig,
    DiscriminatorOutput,
    MultiResolutionDiscriminator,
    build_discriminator,
    load_default_discriminator_config,
)
from .dsp import MelConfig, Waveform, mel_spectrogram_torch
from .generators import (
    GeneratorConfig,
    build_generator,
    draw_noise,
    generator_config_hash,
)
from .generators.export import read_records, write_records
from .serialization import config_hash
from .serialization import config_to_text as _config_text
from .serialization import text_to_mapping

CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    """A loss became non-finite; carries the offending batch's utterance ids."""

    def __init__(self, message: str, batch_ids: list[str]):
        super().__init__(f"{message} (batch utterances: {', '.join(batch_ids)})")
        self.batch_ids = batch_ids


class CheckpointError(RuntimeError):
    """The checkpoint file is unreadable or belongs to another config."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    betas: tuple[float, float] = (0.8, 0.99)
    weight_decay: float = 0.01
    lr_init: float = 2e-4
    lr_decay_per_epoch: float = 0.999
    max_steps: int = 700_000
    segment_samples: int = 8192
    lambda_fm: float = 2.0
    lambda_mel: float = 45.0
    seed: int = 0

    def __post_init__(self):
        positive = {
            "batch_size": self.batch_size,
            "weight_decay": self.weight_decay,
            "lr_init": self.lr_init,
            "max_steps": self.max_steps,
            "segment_samples": self.segment_samples,
            "lambda_fm": self.lambda_fm,
            "lambda_mel": self.lambda_mel,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if not (0 < self.lr_decay_per_epoch <= 1):
            raise ValueError("lr_decay_per_epoch must be in (0, 1]")
        if not all(0 < b < 1 for b in self.betas):
            raise ValueError("betas must lie in (0, 1)")


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Learning rate after ``epoch`` whole epochs of decay."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return cfg.lr_init * cfg.lr_decay_per_epoch**epoch


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def adversarial_losses(
    d_real: DiscriminatorOutput, d_fake: DiscriminatorOutput
) -> tuple[torch.Tensor, torch.Tensor]:
    """Least-squares GAN objectives summed over sub-discriminators.

    Returns (discriminator loss, generator adversarial loss).
    """
    if len(d_real.logits) != len(d_fake.logits):
        raise ValueError(
            f"sub-discriminator count mismatch: {len(d_real.logits)} vs {len(d_fake.logits)}"
        )
    loss_d = 0.0
    loss_g = 0.0
    for real, fake in zip(d_real.logits, d_fake.logits):
        loss_d = loss_d + ((real - 1.0) ** 2).mean() + (fake**2).mean()
        loss_g = loss_g + ((fake - 1.0) ** 2).mean()
    return loss_d, loss_g


def feature_matching_loss(
    features_real: list[list[torch.Tensor]], features_fake: list[list[torch.Tensor]]
) -> torch.Tensor:
    """Mean absolute feature difference, summed over layers and sub-discriminators."""
    if len(features_real) != len(features_fake):
        raise ValueError("sub-discriminator count mismatch in feature matching")
    total = 0.0
    for real_list, fake_list in zip(features_real, features_fake):
        if len(real_list) != len(fake_list):
            raise ValueError("layer count mismatch in feature matching")
        for real, fake in zip(real_list, fake_list):
            if real.shape != fake.shape:
                raise ValueError(
                    f"feature shape mismatch: {tuple(real.shape)} vs {tuple(fake.shape)}"
                )
            total = total + (real - fake).abs().mean()
    return total


def mel_l1_loss(target_audio, generated_audio, cfg: MelConfig):
    """Mean absolute log-mel difference between two equal-length signals.

    Accepts (batch, samples) tensors (differentiable) or two ``Waveform``
    objects (returns a float).
    """
    if isinstance(target_audio, Waveform) or isinstance(generated_audio, Waveform):
        if not (isinstance(target_audio, Waveform) and isinstance(generated_audio, Waveform)):
            raise TypeError("mix of Waveform and tensor arguments")
        a = torch.from_numpy(target_audio.samples.astype(np.float32)).unsqueeze(0)
        b = torch.from_numpy(generated_audio.samples.astype(np.float32)).unsqueeze(0)
        with torch.no_grad():
            return float(mel_l1_loss(a, b, cfg))
    if target_audio.shape != generated_audio.shape:
        raise ValueError(
            f"length mismatch: {tuple(target_audio.shape)} vs {tuple(generated_audio.shape)}"
        )
    mel_target = mel_spectrogram_torch(target_audio, cfg)
    mel_generated = mel_spectrogram_torch(generated_audio, cfg)
    return (mel_target - mel_generated).abs().mean()


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------


@dataclass
class TrainState:
    generator: torch.nn.Module
    discriminator: MultiResolutionDiscriminator
    opt_g: torch.optim.AdamW
    opt_d: torch.optim.AdamW
    noise_rng: torch.Generator
    train_config: TrainConfig
    mel_config: MelConfig
    step: int = 0
    steps_per_epoch: int = 1
    device: str = "cpu"

    @property
    def epoch(self) -> int:
        return self.step // self.steps_per_epoch


def init_state(
    generator_config: GeneratorConfig,
    train_config: TrainConfig,
    mel_config: MelConfig | None = None,
    discriminator_config: DiscriminatorConfig | None = None,
    device: str = "cpu",
) -> TrainState:
    mel_config = mel_config if mel_config is not None else MelConfig()
    disc_config = (
        discriminator_config
        if discriminator_config is not None
        else load_default_discriminator_config()
    )
    generator = build_generator(generator_config, seed=train_config.seed).to(device)
    discriminator = build_discriminator(disc_config, seed=train_config.seed + 1).to(device)
    opt_g = torch.optim.AdamW(
        generator.parameters(),
        lr=train_config.lr_init,
        betas=train_config.betas,
        weight_decay=train_config.weight_decay,
    )
    opt_d = torch.optim.AdamW(
        discriminator.parameters(),
        lr=train_config.lr_init,
        betas=train_config.betas,
        weight_decay=train_config.weight_decay,
    )
    noise_rng = torch.Generator()
    noise_rng.manual_seed(train_config.seed + 2)
    return TrainState(
        generator=generator,
        discriminator=discriminator,
        opt_g=opt_g,
        opt_d=opt_d,
        noise_rng=noise_rng,
        train_config=train_config,
        mel_config=mel_config,
        device=device,
    )


# ---------------------------------------------------------------------------
# deterministic batch selection
# ---------------------------------------------------------------------------


def select_batch_entries(
    train_entries: list[ManifestEntry], cfg: TrainConfig, step: int, steps_per_epoch: int
) -> list[ManifestEntry]:
    """Entries for one step: a slice of the per-epoch seeded permutation."""
    epoch = step // steps_per_epoch
    pos = step % steps_per_epoch
    perm = np.random.default_rng([cfg.seed, 0xE90C, epoch]).permutation(len(train_entries))
    chosen = perm[pos * cfg.batch_size : (pos + 1) * cfg.batch_size]
    entries = [train_entries[i] for i in chosen]
    while len(entries) < cfg.batch_size:  # corpus smaller than one batch
        entries.append(train_entries[int(perm[len(entries) % len(train_entries)])])
    return entries


def make_batch(
    entries: list[ManifestEntry],
    cache: CacheIndex,
    mel_cfg: MelConfig,
    cfg: TrainConfig,
    step: int,
) -> list[TrainingSegment]:
    batch = []
    for slot, entry in enumerate(entries):
        utt = load_utterance(entry, cache, mel_cfg)
        rng = np.random.default_rng([cfg.seed, 0x5E97, step, slot])
        batch.append(sample_segment(utt, cfg.segment_samples, rng, mel_cfg))
    return batch


def collate(batch: list[TrainingSegment], device: str = "cpu"):
    audio = torch.from_numpy(
        np.stack([seg.audio for seg in batch]).astype(np.float32)
    ).unsqueeze(1)
    mel = torch.from_numpy(np.stack([seg.mel for seg in batch]).astype(np.float32))
    return audio.to(device), mel.to(device)


# ---------------------------------------------------------------------------
# the step
# ---------------------------------------------------------------------------


def train_step(state: TrainState, batch: list[TrainingSegment]) -> dict:
    """One discriminator update then one generator update on a batch.

    The discriminator never sees generator gradients (the fake is
    detached for its update) and the generator update uses freshly
    computed discriminator outputs.
    """
    cfg = state.train_config
    if len(batch) != cfg.batch_size:
        raise ValueError(f"expected a batch of {cfg.batch_size}, got {len(batch)}")
    batch_ids = [seg.source_id for seg in batch]
    state.generator.train()
    state.discriminator.train()

    lr = lr_at(state.epoch, cfg)
    for opt in (state.opt_g, state.opt_d):
        for group in opt.param_groups:
            group["lr"] = lr

    audio, mel = collate(batch, state.device)
    noise = draw_noise(
        state.generator.config, mel.size(0), mel.size(2), state.noise_rng, state.device
    )
    fake = state.generator(mel, noise)

    d_real = state.discriminator(audio)
    d_fake = state.discriminator(fake.detach())
    loss_d, _ = adversarial_losses(d_real, d_fake)
    state.opt_d.zero_grad()
    loss_d.backward()
    state.opt_d.step()

    d_real = state.discriminator(audio)
    d_fake = state.discriminator(fake)
    _, loss_g_adv = adversarial_losses(d_real, d_fake)
    loss_fm = feature_matching_loss(d_real.features, d_fake.features)
    loss_mel = mel_l1_loss(audio.squeeze(1), fake.squeeze(1), state.mel_config)
    loss_g = loss_g_adv + cfg.lambda_fm * loss_fm + cfg.lambda_mel * loss_mel
    state.opt_g.zero_grad()
    state.opt_d.zero_grad()
    loss_g.backward()
    state.opt_g.step()

    metrics = {
        "loss_d": float(loss_d.detach()),
        "loss_g_adv": float(loss_g_adv.detach()),
        "loss_fm": float(loss_fm.detach()),
        "loss_mel": float(loss_mel.detach()),
        "lr": lr,
    }
    bad = [k for k, v in metrics.items() if not math.isfinite(v)]
    if bad:
        raise TrainingDiverged(f"non-finite losses {bad} at step {state.step}", batch_ids)
    state.step += 1
    return metrics


@torch.no_grad()
def validate(state: TrainState, validation_set: list[Utterance]) -> float:
    """Mean full-utterance mel L1 between ground truth and resynthesis.

    Latent noise, where a kind needs one, is seeded from (seed, step, item)
    so repeated calls at a fixed state are deterministic and the training
    noise stream is never consumed.
    """
    if not validation_set:
        raise ValueError("validation set is empty")
    cfg = state.train_config
    was_training = state.generator.training
    state.generator.eval()
    try:
        losses = []
        for idx, utt in enumerate(validation_set):
            mel = torch.from_numpy(utt.mel.astype(np.float32)).unsqueeze(0).to(state.device)
            rng = torch.Generator()
            rng.manual_seed((cfg.seed * 0x1F1F ^ state.step * 31 ^ idx) & 0x7FFFFFFF)
            gen_cfg = getattr(state.generator, "config", None)
            noise = (
                draw_noise(gen_cfg, 1, mel.size(2), rng, state.device)
                if gen_cfg is not None
                else None
            )
            wav = state.generator(mel, noise).squeeze(0).squeeze(0)
            target = torch.from_numpy(utt.audio.samples.astype(np.float32)).to(state.device)
            n = min(wav.numel(), target.numel())
            losses.append(
                float(mel_l1_loss(target[:n].unsqueeze(0), wav[:n].unsqueeze(0), state.mel_config))
            )
        return float(np.mean(losses))
    finally:
        if was_training:
            state.generator.train()


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _text_record(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-8"), dtype=np.uint8).copy()


def _record_text(array: np.ndarray) -> str:
    return array.tobytes().decode("utf-8")


def _optimizer_records(opt: torch.optim.Optimizer, module: torch.nn.Module, prefix: str) -> dict:
    records: dict[str, np.ndarray] = {}
    for name, param in module.named_parameters():
        param_state = opt.state.get(param)
        if not param_state:
            continue
        records[f"{prefix}.{name}.step"] = np.asarray(
            [float(param_state["step"])], dtype="<f8"
        )
        for key in ("exp_avg", "exp_avg_sq"):
            records[f"{prefix}.{name}.{key}"] = (
                param_state[key].detach().cpu().numpy().astype("<f4")
            )
    return records


def _load_optimizer_records(
    records: dict, opt: torch.optim.Optimizer, module: torch.nn.Module, prefix: str
) -> None:
    for name, param in module.named_parameters():
        step_key = f"{prefix}.{name}.step"
        if step_key not in records:
            continue
        opt.state[param] = {
            "step": torch.tensor(float(records[step_key][0])),
            "exp_avg": torch.from_numpy(records[f"{prefix}.{name}.exp_avg"]).to(param.device),
            "exp_avg_sq": torch.from_numpy(records[f"{prefix}.{name}.exp_avg_sq"]).to(
                param.device
            ),
        }


def checkpoint_save(state: TrainState, path: str | Path) -> None:
    from .generators import config_to_text  # local import avoids a cycle at module load

    records: dict[str, np.ndarray] = {
        "meta.version": np.asarray([CHECKPOINT_VERSION], dtype="<i8"),
        "meta.step": np.asarray([state.step], dtype="<i8"),
        "meta.steps_per_epoch": np.asarray([state.steps_per_epoch], dtype="<i8"),
        "meta.generator_config": _text_record(config_to_text(state.generator.config)),
        "meta.mel_config": _text_record(_config_text(state.mel_config)),
        "meta.generator_config_hash": _text_record(
            generator_config_hash(state.generator.config)
        ),
        "meta.train_config_hash": _text_record(config_hash(state.train_config)),
        "meta.mel_config_hash": _text_record(config_hash(state.mel_config)),
        "rng.noise": state.noise_rng.get_state().numpy().astype("|u1"),
    }
    for name, param in state.generator.named_parameters():
        records[f"gen.{name}"] = param.detach().cpu().numpy().astype("<f4")
    for name, param in state.discriminator.named_parameters():
        records[f"disc.{name}"] = param.detach().cpu().numpy().astype("<f4")
    for name, buf in state.discriminator.named_buffers():
        records[f"discbuf.{name}"] = buf.detach().cpu().numpy().astype("<f4")
    records.update(_optimizer_records(state.opt_g, state.generator, "optg"))
    records.update(_optimizer_records(state.opt_d, state.discriminator, "optd"))
    write_records(path, records)


def checkpoint_load(path: str | Path, state: TrainState) -> TrainState:
    """Restore a full training state in place; hashes must match the configs."""
    try:
        records = read_records(path)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    expected = {
        "meta.generator_config_hash": generator_config_hash(state.generator.config),
        "meta.train_config_hash": config_hash(state.train_config),
        "meta.mel_config_hash": config_hash(state.mel_config),
    }
    for key, want in expected.items():
        got = _record_text(records[key]) if key in records else "<missing>"
        if got != want:
            raise CheckpointError(
                f"{path}: {key.split('.')[1]} mismatch (checkpoint {got}, current {want})"
            )

    with torch.no_grad():
        for name, param in state.generator.named_parameters():
            param.copy_(torch.from_numpy(records[f"gen.{name}"]))
        for name, param in state.discriminator.named_parameters():
            param.copy_(torch.from_numpy(records[f"disc.{name}"]))
        for name, buf in state.discriminator.named_buffers():
            buf.copy_(torch.from_numpy(records[f"discbuf.{name}"]))
    _load_optimizer_records(records, state.opt_g, state.generator, "optg")
    _load_optimizer_records(records, state.opt_d, state.discriminator, "optd")
    state.noise_rng.set_state(torch.from_numpy(records["rng.noise"]))
    state.step = int(records["meta.step"][0])
    state.steps_per_epoch = int(records["meta.steps_per_epoch"][0])
    return state


def read_checkpoint_generator(path: str | Path) -> tuple[torch.nn.Module, MelConfig]:
    """Load the generator (rebuilt from its stored config) and the mel config."""
    from .generators import config_from_text

    try:
        records = read_records(path)
        gen_cfg = config_from_text(_record_text(records["meta.generator_config"]))
        mel_cfg = MelConfig(**text_to_mapping(_record_text(records["meta.mel_config"])))
    except (OSError, KeyError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    generator = build_generator(gen_cfg, seed=0)
    with torch.no_grad():
        for name, param in generator.named_parameters():
            param.copy_(torch.from_numpy(records[f"gen.{name}"]))
    generator.eval()
    return generator, mel_cfg


# ---------------------------------------------------------------------------
# metric log
# ---------------------------------------------------------------------------


class MetricLog:
    """Append-only line-delimited records of per-step training metrics."""

    def __init__(self, path: str | Path, header: dict | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", encoding="utf-8")
        if fresh and header is not None:
            self.log({"type": "header", **header})

    def log(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metric_log(path: str | Path) -> list[dict]:
    records = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{line_no}: malformed metric record ({exc})") from exc
    return records


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------


def run_training(
    state: TrainState,
    manifest: DatasetManifest,
    cache: CacheIndex,
    metric_log: MetricLog,
    max_steps: int | None = None,
    checkpoint_path: str | Path | None = None,
    checkpoint_interval: int = 5000,
    validate_interval: int = 0,
    validation_limit: int | None = None,
) -> TrainState:
    """Drive train_step to the stoppage, logging metrics and checkpoints.

    Only the train_step call is timed, so validation and checkpoint I/O
    never pollute the seconds-per-batch statistics.
    """
    cfg = state.train_config
    train_entries = manifest.train_entries
    if not train_entries:
        raise ValueError("manifest has no training entries")
    state.steps_per_epoch = max(1, len(train_entries) // cfg.batch_size)
    stop = cfg.max_steps if max_steps is None else max_steps

    validation: list[Utterance] = []
    if validate_interval:
        entries = manifest.validation_entries[:validation_limit]
        validation = [load_utterance(e, cache, state.mel_config) for e in entries]

    while state.step < stop:
        entries = select_batch_entries(train_entries, cfg, state.step, state.steps_per_epoch)
        batch = make_batch(entries, cache, state.mel_config, cfg, state.step)
        begin = time.perf_counter()
        metrics = train_step(state, batch)
        seconds = time.perf_counter() - begin
        metric_log.log(
            {"type": "train", "step": state.step, "seconds_per_batch": seconds, **metrics}
        )
        if validation and state.step % validate_interval == 0:
            metric_log.log(
                {"type": "val", "step": state.step, "val_mel": validate(state, validation)}
            )
        if checkpoint_path is not None and state.step % checkpoint_interval == 0:
            checkpoint_save(state, checkpoint_path)
    if checkpoint_path is not None:
        checkpoint_save(state, checkpoint_path)
    return state
