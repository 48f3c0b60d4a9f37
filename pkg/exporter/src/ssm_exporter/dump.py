"""Golden-activation dumps: run the torch model, record what it saw."""

from __future__ import annotations

import numpy as np
import torch

from .bundle import read_features, write_features
from .errors import ExportError
from .model import load_checkpoint


def dump_activations(ckpt_path, features_path, out_path) -> None:
    """Write the block output per sample, labeled with the argmax class.

    The engine compares its own block output and predictions against this
    file, so the dump is the torch side of the fidelity contract.
    """
    model = load_checkpoint(ckpt_path)
    config = model.config
    samples, _ = read_features(features_path)
    if not samples:
        raise ExportError(f"features {features_path}: no samples to dump")
    expected = (config.seq_len, config.input_dim)
    for i, s in enumerate(samples):
        if s.shape != expected:
            raise ExportError(
                f"features {features_path}: sample {i} has shape {s.shape}, "
                f"model expects {expected}"
            )
    batch = torch.from_numpy(np.stack(samples))
    with torch.no_grad():
        block_out, logits = model.trace(batch)
    dumped = [block_out[i].numpy().copy() for i in range(len(samples))]
    labels = logits.argmax(dim=1).tolist()
    write_features(out_path, dumped, labels)
