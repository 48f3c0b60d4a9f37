"""Name-mapping manifests: which checkpoint tensor feeds which bundle entry.

A manifest is a small JSON document:

    {
      "version": 1,
      "entries": {
        "a": {"from": "block.a_log", "transform": "neg_exp"},
        "w_proj": {"from": "proj.weight"},
        ...
      }
    }

Keeping the mapping in data rather than in code means a renamed
checkpoint field is a one-line manifest edit, and a wrong edit surfaces
as a load-time rejection by the engine instead of silently exporting
garbage.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ManifestError

MANIFEST_VERSION = 1

TRANSFORMS = ("none", "neg_exp", "squeeze_mid")


def default_manifest() -> dict:
    """The mapping for checkpoints produced by this package's model class."""
    entries = {
        "w_proj": {"from": "proj.weight"},
        "b_proj": {"from": "proj.bias"},
        "w_in": {"from": "block.in_proj.weight"},
        "conv_w": {"from": "block.conv.weight", "transform": "squeeze_mid"},
        "conv_b": {"from": "block.conv.bias"},
        "w_xproj": {"from": "block.x_proj.weight"},
        "w_dt": {"from": "block.dt_proj.weight"},
        "b_dt": {"from": "block.dt_proj.bias"},
        "a": {"from": "block.a_log", "transform": "neg_exp"},
        "d_skip": {"from": "block.d_skip"},
        "w_out": {"from": "block.out_proj.weight"},
        "w_head": {"from": "head.weight"},
        "b_head": {"from": "head.bias"},
    }
    return {"version": MANIFEST_VERSION, "entries": entries}


def save_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path}: not valid JSON: {exc}") from exc
    validate_manifest(manifest, where=str(path))
    return manifest


def validate_manifest(manifest: dict, where: str = "manifest") -> None:
    if not isinstance(manifest, dict):
        raise ManifestError(f"{where}: expected a JSON object")
    if manifest.get("version") != MANIFEST_VERSION:
        raise ManifestError(
            f"{where}: unsupported version {manifest.get('version')!r}"
        )
    entries = manifest.get("entries")
    if not isinstance(entries, dict) or not entries:
        raise ManifestError(f"{where}: 'entries' must be a non-empty object")
    for name, rule in entries.items():
        if not isinstance(rule, dict) or not rule.get("from"):
            raise ManifestError(f"{where}: entry {name!r} needs a 'from' tensor name")
        transform = rule.get("transform", "none")
        if transform not in TRANSFORMS:
            raise ManifestError(
                f"{where}: entry {name!r} has unknown transform {transform!r}"
            )


def apply_transform(name: str, tensor: np.ndarray, transform: str) -> np.ndarray:
    if transform == "none":
        return tensor
    if transform == "neg_exp":
        return -np.exp(tensor)
    if transform == "squeeze_mid":
        if tensor.ndim != 3 or tensor.shape[1] != 1:
            raise ManifestError(
                f"entry {name!r}: squeeze_mid needs shape (D, 1, K), got {tensor.shape}"
            )
        return tensor[:, 0, :]
    raise ManifestError(f"entry {name!r}: unknown transform {transform!r}")
