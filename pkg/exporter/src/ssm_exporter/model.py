"""PyTorch definition of the single-block Mamba sequence classifier.

The layer composition mirrors what the inference engine executes: input
projection, one selective-SSM block (in-projection, depthwise causal
conv, selection projections, scan, gating, out-projection), temporal
pooling, and a linear head. The state matrix is trained in log space and
materialized as a = -exp(a_log), which keeps every state transition
strictly decaying no matter where the optimizer wanders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ExportError

POOLING_MODES = ("mean", "max")


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    d_model: int
    seq_len: int
    num_classes: int
    d_state: int = 16
    d_conv: int = 4
    expand: int = 2
    dt_rank: int = 0
    pooling: str = "mean"

    def __post_init__(self):
        for name in ("input_dim", "d_model", "seq_len", "num_classes", "d_state", "d_conv", "expand"):
            if getattr(self, name) < 1:
                raise ExportError(f"config: {name} must be >= 1")
        if self.dt_rank < 0:
            raise ExportError("config: dt_rank must be >= 0 (0 means derive from d_model)")
        if self.dt_rank == 0:
            object.__setattr__(self, "dt_rank", max(1, math.ceil(self.d_model / 16)))
        if self.pooling not in POOLING_MODES:
            raise ExportError(f"config: pooling must be one of {POOLING_MODES}")

    @property
    def d_inner(self) -> int:
        return self.expand * self.d_model

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "d_model": self.d_model,
            "seq_len": self.seq_len,
            "num_classes": self.num_classes,
            "d_state": self.d_state,
            "d_conv": self.d_conv,
            "expand": self.expand,
            "dt_rank": self.dt_rank,
            "pooling": self.pooling,
        }


def selective_scan(u, delta, a, b_seq, c_seq):
    """Batched selective-SSM recurrence.

    u, delta: (B, L, D); a: (D, N); b_seq, c_seq: (B, L, N).
    Returns (B, L, D). Written without in-place state updates so the
    recurrence stays differentiable.
    """
    n_time = u.shape[1]
    state = u.new_zeros(u.shape[0], u.shape[2], a.shape[1])
    rows = []
    for t in range(n_time):
        decay = torch.exp(delta[:, t, :, None] * a)
        drive = delta[:, t, :, None] * b_seq[:, t, None, :] * u[:, t, :, None]
        state = decay * state + drive
        rows.append((state * c_seq[:, t, None, :]).sum(dim=-1))
    return torch.stack(rows, dim=1)


class MambaBlock(nn.Module):
    def __init__(self, d_model: int, d_state: int, d_conv: int, expand: int, dt_rank: int):
        super().__init__()
        d_inner = expand * d_model
        self.d_inner = d_inner
        self.d_state = d_state
        self.dt_rank = dt_rank
        self.in_proj = nn.Linear(d_model, 2 * d_inner, bias=False)
        self.conv = nn.Conv1d(
            d_inner, d_inner, kernel_size=d_conv, groups=d_inner, padding=d_conv - 1
        )
        self.x_proj = nn.Linear(d_inner, dt_rank + 2 * d_state, bias=False)
        self.dt_proj = nn.Linear(dt_rank, d_inner, bias=True)
        a_init = torch.arange(1, d_state + 1, dtype=torch.float32).repeat(d_inner, 1)
        self.a_log = nn.Parameter(torch.log(a_init))
        self.d_skip = nn.Parameter(torch.ones(d_inner))
        self.out_proj = nn.Linear(d_inner, d_model, bias=False)

    def forward(self, x):
        n_time = x.shape[1]
        xz = self.in_proj(x)
        xs, z = xz.split(self.d_inner, dim=-1)
        xs = self.conv(xs.transpose(1, 2))[..., :n_time].transpose(1, 2)
        xs = F.silu(xs)
        proj = self.x_proj(xs)
        dt_raw, b_seq, c_seq = proj.split(
            (self.dt_rank, self.d_state, self.d_state), dim=-1
        )
        delta = F.softplus(self.dt_proj(dt_raw))
        a = -torch.exp(self.a_log)
        y = selective_scan(xs, delta, a, b_seq, c_seq) + xs * self.d_skip
        return self.out_proj(y * F.silu(z))


class SequenceClassifier(nn.Module):
    """Input projection, one Mamba block, temporal pooling, linear head."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.proj = nn.Linear(config.input_dim, config.d_model, bias=True)
        self.block = MambaBlock(
            config.d_model, config.d_state, config.d_conv, config.expand, config.dt_rank
        )
        self.head = nn.Linear(config.d_model, config.num_classes, bias=True)

    def trace(self, features):
        """(B, L, input_dim) -> (block output (B, L, d_model), logits (B, C))."""
        y = self.block(self.proj(features))
        if self.config.pooling == "mean":
            pooled = y.mean(dim=1)
        else:
            pooled = y.max(dim=1).values
        return y, self.head(pooled)

    def forward(self, features):
        return self.trace(features)[1]


def save_checkpoint(path, model: SequenceClassifier) -> None:
    torch.save(
        {"state_dict": model.state_dict(), "config": model.config.to_dict()}, path
    )


def load_checkpoint(path) -> SequenceClassifier:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ExportError(f"checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "state_dict" not in payload or "config" not in payload:
        raise ExportError(f"checkpoint {path}: expected a dict with state_dict and config")
    config = ModelConfig(**payload["config"])
    model = SequenceClassifier(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
