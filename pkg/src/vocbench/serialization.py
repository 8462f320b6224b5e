"""Canonical ``key: value`` text for configs, and content hashes over it.

Every config dataclass in the package serializes to the same sorted YAML
mapping, so equal configs always produce byte-identical text and the hash
stamped into manifests, caches and checkpoints is stable across runs.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
from typing import Any

import yaml


def to_plain(value: Any) -> Any:
    """Recursively convert dataclasses, enums and tuples to plain YAML types."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: to_plain(v) for k, v in value.items()}
    return value


def config_to_text(cfg: Any, kind: str | None = None) -> str:
    """Serialize a config dataclass as sorted ``key: value`` text."""
    mapping = to_plain(cfg)
    if not isinstance(mapping, dict):
        raise TypeError(f"expected a dataclass config, got {type(cfg).__name__}")
    if kind is not None:
        mapping["kind"] = kind
    return yaml.safe_dump(mapping, sort_keys=True, default_flow_style=None)


def text_to_mapping(text: str) -> dict:
    mapping = yaml.safe_load(text)
    if not isinstance(mapping, dict):
        raise ValueError("config text does not describe a mapping")
    return mapping


def config_hash(cfg: Any, kind: str | None = None) -> str:
    """16-hex-digit digest of the canonical config text."""
    text = config_to_text(cfg, kind=kind)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
