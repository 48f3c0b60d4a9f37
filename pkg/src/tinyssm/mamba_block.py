"""One full Mamba layer: projections, causal conv, selection path, scan, gating.

The forward pass follows the reference computational flow stage by stage:

    1. xz = linear(x, W_in); split into xs and gate z
    2. xs = silu(causal depthwise conv(xs))
    3. proj = linear(xs, W_xproj); split into dt_raw, B, C
    4. delta = softplus(linear(dt_raw, W_dt) + b_dt)
    5. y = selective scan over (xs, delta, A, B, C, d_skip)
    6. out = linear(y * silu(z), W_out)

``mamba_forward`` runs stage 5 with the fused streaming scan;
``mamba_forward_reference`` materializes the discretized tensors instead.
Everything else is shared, so the two are bit-identical in fp32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .ssm_core import (
    ScanInputs,
    ScanWorkspace,
    discretize_reference,
    selective_scan_fused,
    selective_scan_reference,
)
from .tensor_core import as_tensor, depthwise_conv1d_causal, linear, silu, softplus


@dataclass(frozen=True)
class MambaConfig:
    """Shape configuration of one Mamba block.

    ``dt_rank=0`` selects the conventional default ceil(d_model / 16).
    """

    d_model: int
    d_state: int = 16
    d_conv: int = 4
    expand: int = 2
    dt_rank: int = 0

    def __post_init__(self):
        if self.dt_rank == 0:
            object.__setattr__(self, "dt_rank", math.ceil(self.d_model / 16))
        for field in ("d_model", "d_state", "d_conv", "expand", "dt_rank"):
            if getattr(self, field) < 1:
                raise DimensionError(f"MambaConfig.{field} must be >= 1")

    @property
    def d_inner(self) -> int:
        return self.expand * self.d_model


@dataclass
class MambaBlockParams:
    """All learned parameters of one Mamba block.

    Shapes (DI = d_inner, R = dt_rank, N = d_state, K = d_conv):

        W_in    (2*DI, d_model)   conv_w (DI, K)    conv_b (DI,)
        W_xproj (R + 2*N, DI)     W_dt   (DI, R)    b_dt   (DI,)
        A       (DI, N) < 0       d_skip (DI,)      W_out  (d_model, DI)
    """

    W_in: np.ndarray
    conv_w: np.ndarray
    conv_b: np.ndarray
    W_xproj: np.ndarray
    W_dt: np.ndarray
    b_dt: np.ndarray
    A: np.ndarray
    d_skip: np.ndarray
    W_out: np.ndarray

    def __post_init__(self):
        for name in ("W_in", "conv_w", "conv_b", "W_xproj", "W_dt", "b_dt", "A", "d_skip", "W_out"):
            setattr(self, name, as_tensor(getattr(self, name), f"block: {name}"))

    def validate(self, config: MambaConfig) -> None:
        """Check every array against the config; raises naming the offending stage."""
        di, n, k, r, dm = (
            config.d_inner,
            config.d_state,
            config.d_conv,
            config.dt_rank,
            config.d_model,
        )
        expected = {
            "W_in": (2 * di, dm),
            "conv_w": (di, k),
            "conv_b": (di,),
            "W_xproj": (r + 2 * n, di),
            "W_dt": (di, r),
            "b_dt": (di,),
            "A": (di, n),
            "d_skip": (di,),
            "W_out": (dm, di),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"block: {name} has shape {actual}, expected {shape}")

    @property
    def d_inner(self) -> int:
        return self.A.shape[0]

    @property
    def d_state(self) -> int:
        return self.A.shape[1]

    @property
    def dt_rank(self) -> int:
        return self.W_dt.shape[1]


def _selection_stage(params: MambaBlockParams, x: np.ndarray):
    """Stages 1-4; returns (xs, z, delta, b_seq, c_seq)."""
    x = as_tensor(x, "block: x")
    if x.ndim != 2 or x.shape[1] != params.W_in.shape[1]:
        raise DimensionError(
            f"block input: x {x.shape} incompatible with W_in {params.W_in.shape}"
        )
    di = params.d_inner
    r, n = params.dt_rank, params.d_state

    xz = linear(x, params.W_in)
    xs, z = xz[:, :di], xz[:, di:]
    xs = silu(depthwise_conv1d_causal(xs, params.conv_w, params.conv_b))
    proj = linear(xs, params.W_xproj)
    dt_raw, b_seq, c_seq = proj[:, :r], proj[:, r:r + n], proj[:, r + n:]
    delta = softplus(linear(dt_raw, params.W_dt, params.b_dt))
    return xs, z, delta, b_seq, c_seq


def _output_stage(params: MambaBlockParams, y_ssm: np.ndarray, z: np.ndarray) -> np.ndarray:
    return linear(y_ssm * silu(z), params.W_out)


def mamba_forward(
    params: MambaBlockParams, x, workspace: ScanWorkspace | None = None
) -> np.ndarray:
    """Forward pass with the fused streaming scan. x and output are (L, d_model)."""
    xs, z, delta, b_seq, c_seq = _selection_stage(params, x)
    inputs = ScanInputs(u=xs, delta=delta, A=params.A, B=b_seq, C=c_seq, d_skip=params.d_skip)
    y_ssm = selective_scan_fused(inputs, workspace)
    return _output_stage(params, y_ssm, z)


def mamba_forward_reference(params: MambaBlockParams, x) -> np.ndarray:
    """Forward pass over the materialized (L, D, N) tensors; the in-engine oracle."""
    xs, z, delta, b_seq, c_seq = _selection_stage(params, x)
    inputs = ScanInputs(u=xs, delta=delta, A=params.A, B=b_seq, C=c_seq, d_skip=params.d_skip)
    disc = discretize_reference(inputs)
    y_ssm = selective_scan_reference(disc, c_seq, xs, params.d_skip)
    return _output_stage(params, y_ssm, z)
