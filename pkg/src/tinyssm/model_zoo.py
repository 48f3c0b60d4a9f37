"""Sequence-classifier pipelines assembled from the engine kernels.

A classifier is: linear projection -> one Mamba block -> global temporal
pooling -> linear head. Two deployment shapes are built in as presets
(keyword spotting with 3 or 10 classes, and activity recognition with 6),
plus a seeded synthetic parameter generator so the whole engine can be
exercised without any exported checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .mamba_block import (
    MambaBlockParams,
    MambaConfig,
    mamba_forward,
    mamba_forward_reference,
)
from .ssm_core import ScanWorkspace
from .tensor_core import argmax, as_tensor, linear, max_pool_time, mean_pool_time

POOLING_MODES = ("mean", "max")
SCAN_PATHS = ("fused", "reference")


@dataclass(frozen=True)
class ClassifierConfig:
    """Shape configuration of one classifier pipeline."""

    input_dim: int
    d_model: int
    seq_len: int
    num_classes: int
    mamba: MambaConfig
    pooling: str = "mean"

    def __post_init__(self):
        for field in ("input_dim", "d_model", "seq_len", "num_classes"):
            if getattr(self, field) < 1:
                raise DimensionError(f"ClassifierConfig.{field} must be >= 1")
        if self.mamba.d_model != self.d_model:
            raise DimensionError(
                f"ClassifierConfig: d_model {self.d_model} != mamba.d_model {self.mamba.d_model}"
            )
        if self.pooling not in POOLING_MODES:
            raise DimensionError(f"ClassifierConfig: unknown pooling {self.pooling!r}")


@dataclass
class ClassifierParams:
    """Projection, Mamba block, and head parameters of one classifier."""

    W_proj: np.ndarray
    b_proj: np.ndarray
    block: MambaBlockParams
    W_head: np.ndarray
    b_head: np.ndarray

    def __post_init__(self):
        self.W_proj = as_tensor(self.W_proj, "classifier: W_proj")
        self.b_proj = as_tensor(self.b_proj, "classifier: b_proj")
        self.W_head = as_tensor(self.W_head, "classifier: W_head")
        self.b_head = as_tensor(self.b_head, "classifier: b_head")

    def validate(self, config: ClassifierConfig) -> None:
        expected = {
            "W_proj": (config.d_model, config.input_dim),
            "b_proj": (config.d_model,),
            "W_head": (config.num_classes, config.d_model),
            "b_head": (config.num_classes,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"classifier: {name} has shape {actual}, expected {shape}")
        self.block.validate(config.mamba)


@dataclass
class ForwardTrace:
    """Intermediate results the fidelity harness measures against."""

    mamba_out: np.ndarray  # (L, d_model), the Mamba-layer output
    logits: np.ndarray  # (num_classes,)


def preset_config(name: str) -> ClassifierConfig:
    """Built-in deployment shapes: ``kws3``, ``kws10``, ``har``."""
    mamba = MambaConfig(d_model=64, d_state=16, d_conv=4, expand=2)
    presets = {
        "kws3": ClassifierConfig(input_dim=40, d_model=64, seq_len=100, num_classes=3, mamba=mamba),
        "kws10": ClassifierConfig(input_dim=40, d_model=64, seq_len=100, num_classes=10, mamba=mamba),
        "har": ClassifierConfig(input_dim=57, d_model=64, seq_len=10, num_classes=6, mamba=mamba),
    }
    try:
        return presets[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(presets)}") from None


def _pool(x: np.ndarray, pooling: str) -> np.ndarray:
    return mean_pool_time(x) if pooling == "mean" else max_pool_time(x)


def classifier_trace(
    params: ClassifierParams,
    features,
    config: ClassifierConfig,
    scan: str = "fused",
    workspace: ScanWorkspace | None = None,
) -> ForwardTrace:
    """Full pipeline keeping the Mamba-layer output around for comparison."""
    if scan not in SCAN_PATHS:
        raise ValueError(f"unknown scan path {scan!r}; choose from {SCAN_PATHS}")
    features = as_tensor(features, "classifier: features")
    if features.shape != (config.seq_len, config.input_dim):
        raise DimensionError(
            f"classifier: features {features.shape}, expected {(config.seq_len, config.input_dim)}"
        )
    x = linear(features, params.W_proj, params.b_proj)
    if scan == "fused":
        mamba_out = mamba_forward(params.block, x, workspace=workspace)
    else:
        mamba_out = mamba_forward_reference(params.block, x)
    pooled = _pool(mamba_out, config.pooling)
    logits = linear(pooled[None, :], params.W_head, params.b_head)[0]
    return ForwardTrace(mamba_out=mamba_out, logits=logits)


def classifier_forward(
    params: ClassifierParams, features, config: ClassifierConfig, scan: str = "fused"
) -> np.ndarray:
    """Logits for one (seq_len, input_dim) feature tensor."""
    return classifier_trace(params, features, config, scan=scan).logits


def predict(
    params: ClassifierParams, features, config: ClassifierConfig, scan: str = "fused"
) -> int:
    """Predicted class index; ties break to the lowest index."""
    return argmax(classifier_forward(params, features, config, scan=scan))


def synth_params(config: ClassifierConfig, seed: int) -> ClassifierParams:
    """Deterministic pseudo-random parameters for exporter-free testing.

    Stream: numpy PCG64 seeded with ``seed``; normal draws use numpy's
    ziggurat ``standard_normal``. Draw order is fixed: W_proj, b_proj,
    W_in, conv_w, conv_b, W_xproj, W_dt, b_dt, A, d_skip, W_out, W_head,
    b_head. Weight matrices are scaled by 1/sqrt(fan_in), biases by 0.1,
    and A is drawn as -exp(g) with g ~ N(0, 1) so every entry is negative.
    """
    rng = np.random.default_rng(seed)
    m = config.mamba
    di, n, k, r = m.d_inner, m.d_state, m.d_conv, m.dt_rank

    def dense(fan_out: int, fan_in: int) -> np.ndarray:
        scale = 1.0 / np.sqrt(fan_in)
        return (rng.standard_normal((fan_out, fan_in)) * scale).astype(np.float32)

    def bias(size: int) -> np.ndarray:
        return (rng.standard_normal(size) * 0.1).astype(np.float32)

    w_proj = dense(config.d_model, config.input_dim)
    b_proj = bias(config.d_model)
    block = MambaBlockParams(
        W_in=dense(2 * di, config.d_model),
        conv_w=dense(di, k),
        conv_b=bias(di),
        W_xproj=dense(r + 2 * n, di),
        W_dt=dense(di, r),
        b_dt=bias(di),
        A=(-np.exp(rng.standard_normal((di, n)))).astype(np.float32),
        d_skip=rng.standard_normal(di).astype(np.float32),
        W_out=dense(config.d_model, di),
    )
    params = ClassifierParams(
        W_proj=w_proj,
        b_proj=b_proj,
        block=block,
        W_head=dense(config.num_classes, config.d_model),
        b_head=bias(config.num_classes),
    )
    params.validate(config)
    return params


def synth_features(config: ClassifierConfig, seed: int, n_samples: int) -> list[np.ndarray]:
    """Deterministic N(0, 1) feature tensors, each (seq_len, input_dim)."""
    rng = np.random.default_rng(seed)
    return [
        rng.standard_normal((config.seq_len, config.input_dim)).astype(np.float32)
        for _ in range(n_samples)
    ]
