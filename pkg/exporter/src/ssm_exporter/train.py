"""A small synthetic trainer so fidelity tests run on a real optimum.

Fidelity testing does not care about accuracy, but it does care that the
weights look like something an optimizer produced rather than raw
initialization, so a few epochs on an easy synthetic task are enough.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from .model import ModelConfig, SequenceClassifier, save_checkpoint

PROTOTYPE_SEED = 1234


def synth_dataset(config: ModelConfig, n_samples: int, seed: int):
    """Noisy copies of per-class prototype sequences.

    The prototypes depend only on the model shape and a fixed seed, so
    train and held-out splits drawn with different ``seed`` values share
    one underlying task.
    """
    proto_gen = torch.Generator().manual_seed(PROTOTYPE_SEED)
    prototypes = torch.randn(
        config.num_classes, config.seq_len, config.input_dim, generator=proto_gen
    )
    gen = torch.Generator().manual_seed(seed)
    labels = torch.randint(0, config.num_classes, (n_samples,), generator=gen)
    noise = torch.randn(n_samples, config.seq_len, config.input_dim, generator=gen)
    features = prototypes[labels] + 0.5 * noise
    return features, labels


def train_toy(
    config: ModelConfig,
    out_path,
    n_samples: int = 240,
    epochs: int = 3,
    batch_size: int = 32,
    lr: float = 1e-2,
    seed: int = 0,
) -> list[float]:
    """Train from scratch and save a checkpoint; returns per-epoch mean loss."""
    torch.manual_seed(seed)
    model = SequenceClassifier(config)
    features, labels = synth_dataset(config, n_samples, seed + 1)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    order_gen = torch.Generator().manual_seed(seed + 2)

    epoch_losses = []
    for _ in range(epochs):
        order = torch.randperm(n_samples, generator=order_gen)
        total = 0.0
        for start in range(0, n_samples, batch_size):
            idx = order[start : start + batch_size]
            logits = model(features[idx])
            loss = F.cross_entropy(logits, labels[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(idx)
        epoch_losses.append(total / n_samples)
    model.eval()
    save_checkpoint(out_path, model)
    return epoch_losses
