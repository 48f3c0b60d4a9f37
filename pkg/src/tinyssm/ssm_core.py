"""Selective state-space scan, in both the materialized and the streaming form.

The reference path first discretizes the continuous-time system into full
(L, D, N) decay and drive tensors and then runs the recurrence over them;
it is the memory-hungry formulation on purpose. The fused path evaluates
the same per-step factors on the fly inside the recurrence, so its working
set is one (D, N) state buffer plus one length-D output row, independent
of sequence length.

Both paths share the single-row discretization kernel and apply every
fp32 rounding in the same order, so for identical inputs their outputs are
bit-identical, not merely close.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .tensor_core import as_tensor


@dataclass
class ScanInputs:
    """Inputs of one selective-scan invocation.

    u       (L, D)  per-channel input sequence
    delta   (L, D)  positive step sizes (softplus output upstream)
    A       (D, N)  continuous-time state matrix, strictly negative entries
    B       (L, N)  input projection sequence (selection-dependent)
    C       (L, N)  output projection sequence
    d_skip  (D,)    optional residual gain applied after the C readout
    """

    u: np.ndarray
    delta: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    d_skip: np.ndarray | None = None

    def __post_init__(self):
        self.u = as_tensor(self.u, "scan: u")
        self.delta = as_tensor(self.delta, "scan: delta")
        self.A = as_tensor(self.A, "scan: A")
        self.B = as_tensor(self.B, "scan: B")
        self.C = as_tensor(self.C, "scan: C")
        if self.d_skip is not None:
            self.d_skip = as_tensor(self.d_skip, "scan: d_skip")
        n_time, n_chan = _require_2d(self.u, "scan: u")
        n_state = self.A.shape[1] if self.A.ndim == 2 else -1
        if self.A.ndim != 2 or self.A.shape[0] != n_chan:
            raise DimensionError(f"scan: A {self.A.shape} incompatible with u {self.u.shape}")
        if self.delta.shape != (n_time, n_chan):
            raise DimensionError(f"scan: delta {self.delta.shape} incompatible with u {self.u.shape}")
        if self.B.shape != (n_time, n_state):
            raise DimensionError(f"scan: B {self.B.shape}, expected {(n_time, n_state)}")
        if self.C.shape != (n_time, n_state):
            raise DimensionError(f"scan: C {self.C.shape}, expected {(n_time, n_state)}")
        if self.d_skip is not None and self.d_skip.shape != (n_chan,):
            raise DimensionError(f"scan: d_skip {self.d_skip.shape}, expected {(n_chan,)}")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(L, D, N)."""
        return self.u.shape[0], self.u.shape[1], self.A.shape[1]


@dataclass
class DiscretizedTensors:
    """Materialized per-step factors: decay A_bar and drive B_bar_u, both (L, D, N)."""

    A_bar: np.ndarray
    B_bar_u: np.ndarray

    def __post_init__(self):
        if self.A_bar.ndim != 3 or self.A_bar.shape != self.B_bar_u.shape:
            raise DimensionError(
                f"discretized: A_bar {self.A_bar.shape} vs B_bar_u {self.B_bar_u.shape}"
            )


class ScanWorkspace:
    """Persistent scratch of the fused scan: one (D, N) state + one length-D row.

    Its byte size equals ``fused_state_bytes(D, N)`` and does not depend on
    sequence length; tests use it to observe the scan stage's memory.
    """

    def __init__(self, n_chan: int, n_state: int):
        self.state = np.zeros((n_chan, n_state), dtype=np.float32)
        self.row = np.zeros(n_chan, dtype=np.float32)

    @property
    def nbytes(self) -> int:
        return self.state.nbytes + self.row.nbytes


def _require_2d(x: np.ndarray, name: str) -> tuple[int, int]:
    if x.ndim != 2:
        raise DimensionError(f"{name}: expected rank 2, got shape {x.shape}")
    return x.shape[0], x.shape[1]


def _discretize_row(delta_row, A, b_row, u_row):
    """Per-step factors for one time index, shared by both scan paths.

    decay[d, n] = exp(delta[d] * A[d, n])  - product rounded to fp32, exp
    taken in double precision and rounded once back to fp32.
    drive[d, n] = (delta[d] * B[n]) * u[d] - left-to-right fp32 factor order.
    """
    decay = np.exp((delta_row[:, None] * A).astype(np.float64)).astype(np.float32)
    drive = (delta_row[:, None] * b_row[None, :]) * u_row[:, None]
    return decay, drive


def discretize_reference(inputs: ScanInputs) -> DiscretizedTensors:
    """Materialize both full (L, D, N) tensors of the unfused formulation."""
    n_time, n_chan, n_state = inputs.dims
    a_bar = np.empty((n_time, n_chan, n_state), dtype=np.float32)
    b_bar_u = np.empty((n_time, n_chan, n_state), dtype=np.float32)
    for i in range(n_time):
        a_bar[i], b_bar_u[i] = _discretize_row(inputs.delta[i], inputs.A, inputs.B[i], inputs.u[i])
    return DiscretizedTensors(A_bar=a_bar, B_bar_u=b_bar_u)


def selective_scan_reference(disc: DiscretizedTensors, C, u, d_skip=None) -> np.ndarray:
    """Run the recurrence over materialized factors.

    state[d, n] <- A_bar[i, d, n] * state[d, n] + B_bar_u[i, d, n]
    y[i, d]      = sum_n state[d, n] * C[i, n]  (+ d_skip[d] * u[i, d])
    """
    C = as_tensor(C, "scan: C")
    u = as_tensor(u, "scan: u")
    n_time, n_chan, n_state = disc.A_bar.shape
    if C.shape != (n_time, disc.A_bar.shape[2]):
        raise DimensionError(f"scan: C {C.shape}, expected {(n_time, n_state)}")
    if u.shape != (n_time, n_chan):
        raise DimensionError(f"scan: u {u.shape}, expected {(n_time, n_chan)}")
    if d_skip is not None:
        d_skip = as_tensor(d_skip, "scan: d_skip")

    state = np.zeros((n_chan, n_state), dtype=np.float32)
    y = np.empty((n_time, n_chan), dtype=np.float32)
    for i in range(n_time):
        np.multiply(disc.A_bar[i], state, out=state)
        np.add(state, disc.B_bar_u[i], out=state)
        np.sum(state * C[i], axis=1, out=y[i])
        if d_skip is not None:
            y[i] += d_skip * u[i]
    return y


def selective_scan_fused(inputs: ScanInputs, workspace: ScanWorkspace | None = None) -> np.ndarray:
    """Streaming scan: same output contract as the reference pair, no (L, D, N) tensors.

    Each sequence row of u, delta, B and C is read exactly once, in
    ascending time order; the per-step factors are computed by the same row
    kernel the reference path uses, so the fp32 result is bit-identical to
    ``selective_scan_reference(discretize_reference(inputs), ...)``.
    """
    n_time, n_chan, n_state = inputs.dims
    if workspace is None:
        workspace = ScanWorkspace(n_chan, n_state)
    elif workspace.state.shape != (n_chan, n_state):
        raise DimensionError(
            f"scan: workspace state {workspace.state.shape}, expected {(n_chan, n_state)}"
        )
    state, row = workspace.state, workspace.row
    state[:] = 0.0

    d_skip = inputs.d_skip
    y = np.empty((n_time, n_chan), dtype=np.float32)
    for i in range(n_time):
        u_row = inputs.u[i]
        delta_row = inputs.delta[i]
        b_row = inputs.B[i]
        c_row = inputs.C[i]
        decay, drive = _discretize_row(delta_row, inputs.A, b_row, u_row)
        np.multiply(decay, state, out=state)
        np.add(state, drive, out=state)
        np.sum(state * c_row, axis=1, out=row)
        if d_skip is not None:
            row += d_skip * u_row
        y[i] = row
    return y


def fused_state_bytes(n_chan: int, n_state: int) -> int:
    """Working set of the fused scan: fp32 (D, N) state plus a length-D row."""
    return 4 * n_chan * n_state + 4 * n_chan


def unfused_intermediate_bytes(n_chan: int, n_state: int, n_time: int) -> int:
    """Bytes of the two materialized (L, D, N) fp32 tensors of the unfused path."""
    return 2 * 4 * n_chan * n_state * n_time
