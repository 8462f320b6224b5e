"""Command-line entry points: train, synth, eval, bench, plot.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config
errors. Every command is deterministic given its config and seeds, and
every output artifact carries the run-config hash for provenance.
"""

from __future__ import annotations

import json
import os
import secrets
import sys
from contextlib import contextmanager
from pathlib import Path

import click

from . import __version__
from .audio_io import read_mel_cache, read_wav, write_wav
from .config import ConfigError, RunConfig, load_run_config, pick_device
from .datasets import (
    CorpusError,
    build_manifest,
    cache_mels,
    load_manifest,
    save_manifest,
)
from .discriminators import load_default_discriminator_config, tiny_discriminator_config
from .dsp import MelConfig, mel_spectrogram
from .evaluation import (
    EvaluationError,
    benchmark_rows,
    mcd_report,
    synthesize_set,
    write_benchmark_csv,
    write_eval_csv,
)
from .generators import GeneratorKind, default_config, generator_config_hash
from .serialization import config_hash
from .training import (
    CheckpointError,
    MetricLog,
    TrainingDiverged,
    checkpoint_load,
    init_state,
    read_checkpoint_generator,
    read_metric_log,
    run_training,
)

_FAILURES = (
    ConfigError,
    CorpusError,
    CheckpointError,
    EvaluationError,
    TrainingDiverged,
    ValueError,
    OSError,
)

KIND_CHOICES = [k.value for k in GeneratorKind]


class LockHeld(RuntimeError):
    pass


@contextmanager
def _dir_lock(directory: Path):
    """One trainer per checkpoint directory, enforced by an exclusive lockfile."""
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld(
            f"{lock} exists: another trainer may own this checkpoint directory "
            "(remove the file if that run is dead)"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        yield
    finally:
        os.close(fd)
        lock.unlink(missing_ok=True)


def _fail(exc: BaseException) -> None:
    raise click.ClickException(str(exc))


@click.group()
@click.version_option(version=__version__)
def main():
    """GAN-vocoder workbench: six generators, one discriminating framework."""


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(KIND_CHOICES), default=None,
              help="Generator kind; defaults to the config's generator section.")
@click.option("--resume", is_flag=True, help="Continue from the kind's checkpoint.")
@click.option("--max-steps", type=int, default=None, help="Override the stoppage step.")
def cmd_train(config_path: str, kind: str | None, resume: bool, max_steps: int | None):
    """Train one generator against the shared discriminating framework."""
    try:
        run = load_run_config(config_path)
        gen_cfg = run.generator
        if kind is not None:
            if gen_cfg is not None and gen_cfg.kind.value != kind:
                raise ConfigError(
                    f"--kind {kind} conflicts with the config's generator "
                    f"({gen_cfg.kind.value})"
                )
            if gen_cfg is None:
                gen_cfg = default_config(kind)
        if gen_cfg is None:
            raise ConfigError("no generator: pass --kind or add a generator section")

        run.cache_dir.mkdir(parents=True, exist_ok=True)
        run.output_dir.mkdir(parents=True, exist_ok=True)
        manifest_path = run.cache_dir / "manifest.txt"
        if manifest_path.exists():
            manifest = load_manifest(manifest_path)
            if manifest.mel_config_hash != config_hash(run.mel):
                raise ConfigError(
                    f"{manifest_path} was built for a different mel config; "
                    "delete the cache directory to rebuild"
                )
        else:
            manifest = build_manifest(
                run.corpus_root, run.split_sizes, run.manifest_seed, run.mel
            )
            save_manifest(manifest, manifest_path)
        cache = cache_mels(manifest, run.mel, run.cache_dir / "mels")
        if cache.errors:
            for utt, err in sorted(cache.errors.items()):
                click.echo(f"cache error for {utt}: {err}", err=True)
            raise CorpusError(f"{len(cache.errors)} utterances failed to cache")

        disc_cfg = (
            tiny_discriminator_config()
            if run.discriminator == "tiny"
            else load_default_discriminator_config()
        )
        device = pick_device()
        state = init_state(gen_cfg, run.train, run.mel, disc_cfg, device=device)
        ckpt_path = run.checkpoint_dir / f"{gen_cfg.kind.value}.ckpt"
        log_path = run.output_dir / "logs" / f"{gen_cfg.kind.value}.jsonl"

        with _dir_lock(run.checkpoint_dir):
            if resume:
                checkpoint_load(ckpt_path, state)
                click.echo(f"resumed from {ckpt_path} at step {state.step}")
            with MetricLog(
                log_path,
                header={
                    "kind": gen_cfg.kind.value,
                    "run_config_hash": run.stamp,
                    "generator_config_hash": generator_config_hash(gen_cfg),
                },
            ) as log:
                run_training(
                    state,
                    manifest,
                    cache,
                    log,
                    max_steps=max_steps,
                    checkpoint_path=ckpt_path,
                    checkpoint_interval=run.checkpoint_interval,
                    validate_interval=run.validate_interval,
                    validation_limit=run.validation_limit,
                )
        click.echo(f"trained {gen_cfg.kind.value} to step {state.step}; checkpoint {ckpt_path}")
    except LockHeld as exc:
        _fail(exc)
    except _FAILURES as exc:
        _fail(exc)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


@main.command("synth")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mel-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--wav-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="Latent seed; generated if omitted.")
def cmd_synth(checkpoint: str, mel_dir: str | None, wav_dir: str | None, out_dir: str, seed: int | None):
    """Vocode cached mels (or mels computed from WAVs) back to waveforms."""
    if (mel_dir is None) == (wav_dir is None):
        raise click.UsageError("pass exactly one of --mel-dir / --wav-dir")
    try:
        generator, mel_cfg = read_checkpoint_generator(checkpoint)
        if seed is None:
            seed = secrets.randbelow(2**31)
            click.echo(f"latent seed: {seed}")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        sources: list[tuple[str, Path]] = []
        src_dir = Path(mel_dir or wav_dir)
        pattern = "*.mel" if mel_dir else "*.wav"
        sources = sorted((p.stem, p) for p in src_dir.glob(pattern))
        if not sources:
            raise EvaluationError(f"no {pattern} files in {src_dir}")

        device = pick_device()
        failures = 0
        written = []
        for utt_id, path in sources:
            try:
                if mel_dir:
                    mel_values = read_mel_cache(path)
                else:
                    w = read_wav(path, expect_sample_rate=mel_cfg.sample_rate)
                    mel_values = mel_spectrogram(w, mel_cfg).values
                wavs, _ = synthesize_set(
                    generator, [mel_values], seed=seed, device=device,
                    sample_rate=mel_cfg.sample_rate,
                )
                target = out / f"{utt_id}.wav"
                write_wav(target, wavs[0])
                written.append(utt_id)
            except _FAILURES as exc:
                failures += 1
                click.echo(f"failed on {utt_id}: {exc}", err=True)
        (out / "provenance.json").write_text(
            json.dumps(
                {
                    "checkpoint": str(checkpoint),
                    "generator_config_hash": generator_config_hash(generator.config),
                    "seed": seed,
                    "written": written,
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        click.echo(f"wrote {len(written)} waveforms to {out} ({failures} failures)")
        if not written:
            raise EvaluationError("every input failed to synthesize")
    except _FAILURES as exc:
        _fail(exc)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@main.command("eval")
@click.option("--ref-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--syn-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--mode", type=click.Choice(["GT", "TTS"]), required=True)
@click.option("--out", "out_csv", type=click.Path(dir_okay=False), default="eval_report.csv")
def cmd_eval(ref_dir: str, syn_dir: str, mode: str, out_csv: str):
    """Mel-cepstral-distortion report over paired reference/synthesis WAVs."""
    try:
        refs = {p.stem: p for p in sorted(Path(ref_dir).glob("*.wav"))}
        syns = {p.stem: p for p in sorted(Path(syn_dir).glob("*.wav"))}
        unpaired = sorted(set(refs) ^ set(syns))
        if unpaired:
            raise EvaluationError(
                f"unpaired utterances between {ref_dir} and {syn_dir}: {unpaired}"
            )
        if not refs:
            raise EvaluationError("no WAV pairs found")
        ids = sorted(refs)
        mel_cfg = MelConfig()
        ref_audio = [read_wav(refs[i]) for i in ids]
        syn_audio = [read_wav(syns[i]) for i in ids]
        report = mcd_report(ref_audio, syn_audio, mode, mel_cfg, utterance_ids=ids)
        write_eval_csv(report, out_csv, config_stamp=config_hash(mel_cfg))
        click.echo(
            f"{mode} MCD over {len(ids)} utterances: "
            f"{report.mean_mcd:.3f} +/- {report.ci95:.3f} dB -> {out_csv}"
        )
    except _FAILURES as exc:
        _fail(exc)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


@main.command("bench")
@click.argument("checkpoints", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--mel-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--logs-dir", type=click.Path(file_okay=False), default=None,
              help="Directory of <kind>.jsonl metric logs for training speed.")
@click.option("--out", "out_csv", type=click.Path(dir_okay=False), default="benchmark.csv")
@click.option("--seed", type=int, default=0)
def cmd_bench(checkpoints: tuple[str, ...], mel_dir: str, logs_dir: str | None,
              out_csv: str, seed: int):
    """Model-summary table: parameters, measured speeds, input types."""
    try:
        mels = [read_mel_cache(p) for p in sorted(Path(mel_dir).glob("*.mel"))]
        if not mels:
            raise EvaluationError(f"no .mel files in {mel_dir}")
        generators = []
        for ckpt in checkpoints:
            generator, _ = read_checkpoint_generator(ckpt)
            generators.append(generator)
        logs: dict[str, list[dict]] = {}
        if logs_dir:
            for generator in generators:
                log_path = Path(logs_dir) / f"{generator.config.kind.value}.jsonl"
                if log_path.exists():
                    logs[generator.config.kind.value] = read_metric_log(log_path)
        rows = benchmark_rows(generators, mels, logs, seed=seed, device=pick_device())
        stamp = config_hash({"checkpoints": [str(c) for c in checkpoints], "seed": seed})
        write_benchmark_csv(rows, out_csv, config_stamp=stamp)
        click.echo(f"benchmarked {len(rows)} generators -> {out_csv}")
    except _FAILURES as exc:
        _fail(exc)


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------


@main.command("plot")
@click.argument("logs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="loss_curves.png")
def cmd_plot(logs: tuple[str, ...], out_path: str):
    """Overlay mel-L1 curves from metric logs: training above, validation below."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    try:
        fig, (ax_train, ax_val) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
        for log_path in logs:
            records = read_metric_log(log_path)
            label = Path(log_path).stem
            train = [(r["step"], r["loss_mel"]) for r in records if r.get("type") == "train"]
            val = [(r["step"], r["val_mel"]) for r in records if r.get("type") == "val"]
            if train:
                steps, losses = zip(*train)
                ax_train.plot(steps, losses, label=label, marker="." if len(train) < 3 else None)
            if val:
                steps, losses = zip(*val)
                ax_val.plot(steps, losses, label=label, marker="." if len(val) < 3 else None)
        ax_train.set_ylabel("training mel L1")
        ax_val.set_ylabel("validation mel L1")
        ax_val.set_xlabel("step")
        for ax in (ax_train, ax_val):
            if ax.lines:
                ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out_path, dpi=120)
        plt.close(fig)
        click.echo(f"wrote {out_path}")
    except _FAILURES as exc:
        _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
