"""Dense fp32 kernels used by every other part of the engine.

A "tensor" here is a C-contiguous float32 numpy array of rank <= 4 with all
extents >= 1. There is no broadcasting engine and no implicit dtype
promotion: every operation states its shapes explicitly and produces fresh
float32 output. All functions are pure and deterministic - identical input
bits give identical output bits across runs and across engine instances.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

MAX_RANK = 4


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Coerce ``x`` to a C-contiguous float32 array and check tensor invariants."""
    arr = np.asarray(x, dtype=np.float32)
    if arr.ndim == 0 or arr.ndim > MAX_RANK:
        raise DimensionError(f"{name}: rank {arr.ndim} outside supported range 1..{MAX_RANK}")
    if any(e < 1 for e in arr.shape):
        raise DimensionError(f"{name}: all extents must be >= 1, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def _require_rank(x: np.ndarray, rank: int, name: str) -> None:
    if x.ndim != rank:
        raise DimensionError(f"{name}: expected rank {rank}, got shape {x.shape}")


def linear(x, w, b=None) -> np.ndarray:
    """Affine map ``out[l, o] = sum_i x[l, i] * w[o, i] (+ b[o])``.

    x is (L, F_in), w is (F_out, F_in), b is optional (F_out,). Output is
    (L, F_out).
    """
    x = as_tensor(x, "linear: x")
    w = as_tensor(w, "linear: w")
    _require_rank(x, 2, "linear: x")
    _require_rank(w, 2, "linear: w")
    if x.shape[1] != w.shape[1]:
        raise DimensionError(f"linear: x {x.shape} incompatible with w {w.shape}")
    out = x @ w.T
    if b is not None:
        b = as_tensor(b, "linear: b")
        _require_rank(b, 1, "linear: b")
        if b.shape[0] != w.shape[0]:
            raise DimensionError(f"linear: b {b.shape} incompatible with w {w.shape}")
        out += b
    return out


def softplus(x) -> np.ndarray:
    """Elementwise ``ln(1 + exp(x))`` in the overflow-safe form.

    Computed as ``max(x, 0) + log1p(exp(-|x|))``; the naive form overflows
    fp32 for x around 88 while this one never does. Output is strictly
    positive and monotone in each element.
    """
    x = as_tensor(x, "softplus: x")
    return np.maximum(x, np.float32(0.0)) + np.log1p(np.exp(-np.abs(x)))


def silu(x) -> np.ndarray:
    """Elementwise ``x * sigmoid(x)``.

    The sigmoid is evaluated from exp(-|x|) only, so no intermediate
    overflows for any finite fp32 input.
    """
    x = as_tensor(x, "silu: x")
    t = np.exp(-np.abs(x))
    sig = np.where(x >= 0, np.float32(1.0) / (np.float32(1.0) + t), t / (np.float32(1.0) + t))
    return x * sig


def depthwise_conv1d_causal(x, w, b=None) -> np.ndarray:
    """Per-channel causal 1-d convolution with K-1 leading zero rows.

    x is (L, C) time-major, w is (C, K), b is optional (C,). The output at
    time t depends only on inputs at times <= t:

        out[t, c] = b[c] + sum_k w[c, k] * x_pad[t + k, c]

    Taps are accumulated in ascending k order.
    """
    x = as_tensor(x, "conv1d: x")
    w = as_tensor(w, "conv1d: w")
    _require_rank(x, 2, "conv1d: x")
    _require_rank(w, 2, "conv1d: w")
    n_time, n_chan = x.shape
    if w.shape[0] != n_chan:
        raise DimensionError(f"conv1d: x {x.shape} incompatible with w {w.shape}")
    n_tap = w.shape[1]

    pad = np.zeros((n_time + n_tap - 1, n_chan), dtype=np.float32)
    pad[n_tap - 1:] = x
    if b is not None:
        b = as_tensor(b, "conv1d: b")
        if b.shape != (n_chan,):
            raise DimensionError(f"conv1d: b {b.shape} incompatible with w {w.shape}")
        out = np.tile(b, (n_time, 1))
    else:
        out = np.zeros((n_time, n_chan), dtype=np.float32)
    for k in range(n_tap):
        out += w[:, k] * pad[k:k + n_time]
    return out


def mean_pool_time(x) -> np.ndarray:
    """Mean over the time axis: (L, D) -> (D,). Requires L >= 1."""
    x = as_tensor(x, "mean_pool: x")
    _require_rank(x, 2, "mean_pool: x")
    return x.mean(axis=0)


def max_pool_time(x) -> np.ndarray:
    """Max over the time axis: (L, D) -> (D,). Requires L >= 1."""
    x = as_tensor(x, "max_pool: x")
    _require_rank(x, 2, "max_pool: x")
    return x.max(axis=0)


def argmax(x) -> int:
    """Index of the largest element of a vector; ties break to the lowest index."""
    x = as_tensor(x, "argmax: x")
    _require_rank(x, 1, "argmax: x")
    return int(np.argmax(x))
