#!/usr/bin/env python3
"""End-to-end demo on the fixture corpus at tiny scale.

Trains two kinds for a handful of steps, synthesizes the validation mels,
computes a GT-mode MCD report, emits the benchmark table and the loss
plot. Everything lands under the given working directory (default
./demo_run). Expect a few minutes on CPU.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

import yaml

REPO = Path(__file__).resolve().parents[1]
CORPUS = REPO / "tests" / "fixtures" / "corpus"


def cli(*args: str) -> None:
    cmd = [sys.executable, "-m", "vocbench.cli", *args]
    print("+", " ".join(str(a) for a in args))
    subprocess.run(cmd, check=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workdir", nargs="?", default=Path("demo_run"), type=Path)
    parser.add_argument("--steps", type=int, default=30)
    args = parser.parse_args()

    work = args.workdir.resolve()
    work.mkdir(parents=True, exist_ok=True)
    config = {
        "corpus_root": str(CORPUS),
        "cache_dir": str(work / "cache"),
        "checkpoint_dir": str(work / "checkpoints"),
        "output_dir": str(work / "out"),
        "split_sizes": [8, 2],
        "manifest_seed": 7,
        "discriminator": "tiny",
        "train": {"batch_size": 2, "segment_samples": 4096, "seed": 11},
        "validate_interval": 10,
        "checkpoint_interval": 10,
    }
    config_path = work / "run.yaml"
    config_path.write_text(yaml.safe_dump(config), encoding="utf-8")

    kinds = ["melgan", "proposed"]
    for kind in kinds:
        tiny = {
            "melgan": {"kind": "melgan", "ngf": 2, "n_residual_layers": 2},
            "proposed": {
                "kind": "proposed", "channels": 8, "blocks": 3,
                "gw_kernel": 15, "gw_groups": 8, "noise_dim": 4,
            },
        }[kind]
        kind_cfg = dict(config, generator=tiny)
        kind_path = work / f"run_{kind}.yaml"
        kind_path.write_text(yaml.safe_dump(kind_cfg), encoding="utf-8")
        cli("train", "--config", str(kind_path), "--max-steps", str(args.steps))

    ckpts = [str(work / "checkpoints" / f"{k}.ckpt") for k in kinds]
    mel_dir = work / "cache" / "mels"
    synth_dir = work / "out" / "synth_melgan"
    cli("synth", "--checkpoint", ckpts[0], "--mel-dir", str(mel_dir),
        "--out-dir", str(synth_dir), "--seed", "3")
    cli("eval", "--ref-dir", str(CORPUS / "wavs"), "--syn-dir", str(synth_dir),
        "--mode", "GT", "--out", str(work / "out" / "mcd_gt.csv"))
    cli("bench", *ckpts, "--mel-dir", str(mel_dir),
        "--logs-dir", str(work / "out" / "logs"), "--out", str(work / "out" / "benchmark.csv"))
    cli("plot", *(str(work / "out" / "logs" / f"{k}.jsonl") for k in kinds),
        "--out", str(work / "out" / "loss_curves.png"))
    print(f"demo artifacts under {work}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
