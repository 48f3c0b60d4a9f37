"""Checkpoint-to-bundle conversion, and the reverse for round-trip checks."""

from __future__ import annotations

import numpy as np
import torch

from .bundle import POOLING_CODES, POOLING_NAMES, read_bundle, write_bundle
from .errors import ExportError
from .manifest import apply_transform, load_manifest
from .model import ModelConfig, SequenceClassifier, load_checkpoint


def config_fields(config: ModelConfig) -> tuple[int, ...]:
    return (
        config.input_dim,
        config.d_model,
        config.seq_len,
        config.num_classes,
        config.d_state,
        config.d_conv,
        config.expand,
        config.dt_rank,
        POOLING_CODES[config.pooling],
    )


def export_bundle(ckpt_path, manifest_path, out_path) -> None:
    """Map checkpoint tensors through the manifest and write the bundle."""
    model = load_checkpoint(ckpt_path)
    manifest = load_manifest(manifest_path)
    state = model.state_dict()
    entries: dict[str, np.ndarray] = {}
    for name, rule in manifest["entries"].items():
        source = rule["from"]
        if source not in state:
            raise ExportError(
                f"manifest entry {name!r}: checkpoint has no tensor {source!r}"
            )
        tensor = state[source].detach().cpu().numpy().astype(np.float32)
        entries[name] = apply_transform(name, tensor, rule.get("transform", "none"))
    write_bundle(out_path, config_fields(model.config), entries)


def import_bundle(path) -> SequenceClassifier:
    """Rebuild a torch model from a bundle written by the default manifest."""
    fields, entries = read_bundle(path)
    if fields[8] not in POOLING_NAMES:
        raise ExportError(f"bundle {path}: unknown pooling code {fields[8]}")
    config = ModelConfig(
        input_dim=fields[0],
        d_model=fields[1],
        seq_len=fields[2],
        num_classes=fields[3],
        d_state=fields[4],
        d_conv=fields[5],
        expand=fields[6],
        dt_rank=fields[7],
        pooling=POOLING_NAMES[fields[8]],
    )
    try:
        a = entries["a"]
        if np.any(a >= 0.0):
            raise ExportError(f"bundle {path}: entry 'a' must be strictly negative")
        state = {
            "proj.weight": entries["w_proj"],
            "proj.bias": entries["b_proj"],
            "block.in_proj.weight": entries["w_in"],
            "block.conv.weight": entries["conv_w"][:, None, :],
            "block.conv.bias": entries["conv_b"],
            "block.x_proj.weight": entries["w_xproj"],
            "block.dt_proj.weight": entries["w_dt"],
            "block.dt_proj.bias": entries["b_dt"],
            "block.a_log": np.log(-a),
            "block.d_skip": entries["d_skip"],
            "block.out_proj.weight": entries["w_out"],
            "head.weight": entries["w_head"],
            "head.bias": entries["b_head"],
        }
    except KeyError as exc:
        raise ExportError(f"bundle {path}: missing entry {exc}") from exc
    model = SequenceClassifier(config)
    try:
        model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in state.items()})
    except (KeyError, RuntimeError) as exc:
        raise ExportError(f"bundle {path}: {exc}") from exc
    model.eval()
    return model
