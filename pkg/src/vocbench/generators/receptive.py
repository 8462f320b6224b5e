"""Receptive-field arithmetic and its empirical cross-check.

``receptive_field`` interprets a layer plan and returns the span of
positions (in output units) that a single input-position perturbation can
reach. ``probe_receptive_field_empirical`` measures the same span on a
built generator by forward-differencing an impulse through a positively
rectified copy of the network, so the two must agree exactly.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import torch
from torch import nn
from torch.nn.utils import parametrize


@dataclass(frozen=True)
class Conv:
    """Stride-1 convolution at the current rate."""

    kernel: int
    dilation: int = 1


@dataclass(frozen=True)
class Upsample:
    """Nearest-neighbor upsampling by an integer factor."""

    factor: int


@dataclass(frozen=True)
class TConv:
    """Transposed convolution upsampling by ``stride``."""

    kernel: int
    stride: int


@dataclass(frozen=True)
class Parallel:
    """Same-rate branches merged additively; an empty branch is identity."""

    branches: tuple[tuple, ...]


def receptive_field(plan) -> int:
    """Affected output span of a one-position input perturbation."""
    span = 1
    for op in plan:
        if isinstance(op, Conv):
            span += (op.kernel - 1) * op.dilation
        elif isinstance(op, Upsample):
            span *= op.factor
        elif isinstance(op, TConv):
            span = (span - 1) * op.stride + op.kernel
        elif isinstance(op, Parallel):
            span += max(_branch_growth(branch) for branch in op.branches)
        else:
            raise TypeError(f"unsupported layer type in plan: {op!r}")
    return span


def _branch_growth(branch) -> int:
    growth = 0
    for op in branch:
        if isinstance(op, Conv):
            growth += (op.kernel - 1) * op.dilation
        elif isinstance(op, Parallel):
            growth += max(_branch_growth(b) for b in op.branches)
        else:
            raise TypeError(f"unsupported layer type inside a parallel branch: {op!r}")
    return growth


def rectify_for_probe(module: nn.Module) -> nn.Module:
    """Return a float64 copy with non-negative weights and zero biases.

    On such a copy every activation used by the generators maps zero to
    zero and positive to positive, so a zero input yields a zero output
    and an impulse marks exactly the positions it can reach.
    """
    probe = copy.deepcopy(module).double().eval()
    for sub in probe.modules():
        if parametrize.is_parametrized(sub):
            for name in list(getattr(sub, "parametrizations", {})):
                parametrize.remove_parametrizations(sub, name, leave_parametrized=True)
    with torch.no_grad():
        for name, param in probe.named_parameters():
            if name.endswith("bias"):
                param.zero_()
            else:
                param.abs_().add_(1e-3)
    return probe


@torch.no_grad()
def probe_receptive_field_empirical(
    generator: nn.Module,
    frames: int = 16,
    max_frames: int = 4096,
) -> int:
    """Measure the output span touched by perturbing one input mel frame."""
    probe = rectify_for_probe(generator)
    cfg = probe.config
    while frames <= max_frames:
        mel = torch.zeros(1, cfg.in_mels, frames, dtype=torch.float64)
        noise_shape = probe.noise_shape(frames)
        noise = (
            torch.zeros(1, *noise_shape, dtype=torch.float64)
            if noise_shape is not None
            else None
        )
        baseline = probe(mel, noise)
        mel[:, :, frames // 2] = 1.0
        touched = (probe(mel, noise) - baseline).abs().flatten() > 0
        idx = touched.nonzero().flatten()
        if idx.numel() == 0:
            raise RuntimeError("impulse probe produced no response")
        if idx[0] == 0 or idx[-1] == touched.numel() - 1:
            frames *= 2  # span clipped by the signal edges; retry longer
            continue
        return int(idx[-1] - idx[0] + 1)
    raise RuntimeError(f"receptive field still edge-clipped at {max_frames} frames")
