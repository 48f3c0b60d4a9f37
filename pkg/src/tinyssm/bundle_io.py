"""Binary serialization: weight bundles and feature containers.

Both formats are little-endian and fully self-describing so a reader in
any language can consume them with nothing but the layout below.

Weight bundle (magic ``MLMW``)::

    magic     4 bytes  b"MLMW"
    version   u32      currently 1
    config    9 x u32  input_dim, d_model, seq_len, num_classes,
                       d_state, d_conv, expand, dt_rank, pooling
                       (pooling: 0 = mean, 1 = max)
    count     u32      number of table entries
    table     per entry: u8 name length, ascii name, u32 rank,
              rank x u32 dims, u64 absolute file offset of the data
    payload   fp32 little-endian tensors, 4-byte aligned

Feature container (magic ``MLMF``)::

    magic      4 bytes  b"MLMF"
    count      u32      number of samples
    label_flag u32      1 when each sample carries a u32 label
    samples    per sample: u32 rows, u32 cols, rows*cols fp32 values,
               then one u32 label when label_flag is set

The same container holds input features, per-step activations, and
logits; rows and cols are whatever the producer measured.
"""

from __future__ import annotations

import math
import struct
import warnings

import numpy as np

from .errors import BundleConsistencyError, BundleFormatError, StabilityError
from .mamba_block import MambaBlockParams, MambaConfig
from .model_zoo import ClassifierConfig, ClassifierParams

BUNDLE_MAGIC = b"MLMW"
FEATURES_MAGIC = b"MLMF"
BUNDLE_VERSION = 1
POOLING_CODES = {"mean": 0, "max": 1}
POOLING_NAMES = {code: name for name, code in POOLING_CODES.items()}
MAX_RANK = 4

REQUIRED_ENTRIES = (
    "w_proj",
    "b_proj",
    "w_in",
    "conv_w",
    "conv_b",
    "w_xproj",
    "w_dt",
    "b_dt",
    "a",
    "d_skip",
    "w_out",
    "w_head",
    "b_head",
)

_HEADER = struct.Struct("<4s11I")  # magic, version, 9 config fields, count


def _align4(n: int) -> int:
    return -(-n // 4) * 4


def config_to_fields(config: ClassifierConfig) -> tuple[int, ...]:
    m = config.mamba
    return (
        config.input_dim,
        config.d_model,
        config.seq_len,
        config.num_classes,
        m.d_state,
        m.d_conv,
        m.expand,
        m.dt_rank,
        POOLING_CODES[config.pooling],
    )


def config_from_fields(fields: tuple[int, ...]) -> ClassifierConfig:
    input_dim, d_model, seq_len, num_classes, d_state, d_conv, expand, dt_rank, pooling = fields
    if pooling not in POOLING_NAMES:
        raise BundleFormatError(f"bundle: unknown pooling code {pooling}")
    try:
        mamba = MambaConfig(
            d_model=d_model, d_state=d_state, d_conv=d_conv, expand=expand, dt_rank=dt_rank
        )
        return ClassifierConfig(
            input_dim=input_dim,
            d_model=d_model,
            seq_len=seq_len,
            num_classes=num_classes,
            mamba=mamba,
            pooling=POOLING_NAMES[pooling],
        )
    except Exception as exc:
        raise BundleConsistencyError(f"bundle: invalid config fields {fields}: {exc}") from exc


def entries_from_params(params: ClassifierParams) -> dict[str, np.ndarray]:
    b = params.block
    return {
        "w_proj": params.W_proj,
        "b_proj": params.b_proj,
        "w_in": b.W_in,
        "conv_w": b.conv_w,
        "conv_b": b.conv_b,
        "w_xproj": b.W_xproj,
        "w_dt": b.W_dt,
        "b_dt": b.b_dt,
        "a": b.A,
        "d_skip": b.d_skip,
        "w_out": b.W_out,
        "w_head": params.W_head,
        "b_head": params.b_head,
    }


def params_from_entries(entries: dict[str, np.ndarray]) -> ClassifierParams:
    missing = [name for name in REQUIRED_ENTRIES if name not in entries]
    if missing:
        raise BundleConsistencyError(f"bundle: missing required entries {missing}")
    return ClassifierParams(
        W_proj=entries["w_proj"],
        b_proj=entries["b_proj"],
        block=MambaBlockParams(
            W_in=entries["w_in"],
            conv_w=entries["conv_w"],
            conv_b=entries["conv_b"],
            W_xproj=entries["w_xproj"],
            W_dt=entries["w_dt"],
            b_dt=entries["b_dt"],
            A=entries["a"],
            d_skip=entries["d_skip"],
            W_out=entries["w_out"],
        ),
        W_head=entries["w_head"],
        b_head=entries["b_head"],
    )


def write_bundle(
    path,
    config: ClassifierConfig,
    params: ClassifierParams,
    extra_entries: dict[str, np.ndarray] | None = None,
) -> None:
    """Serialize config and parameters; extra entries ride along untyped."""
    entries = entries_from_params(params)
    for name, arr in (extra_entries or {}).items():
        entries[name] = np.asarray(arr, dtype=np.float32)
    names = list(REQUIRED_ENTRIES) + sorted(set(entries) - set(REQUIRED_ENTRIES))

    table_size = 0
    for name in names:
        raw = name.encode("ascii")
        if not 1 <= len(raw) <= 255:
            raise BundleConsistencyError(f"bundle: entry name {name!r} length out of range")
        if entries[name].ndim > MAX_RANK:
            raise BundleConsistencyError(f"bundle: entry {name!r} rank exceeds {MAX_RANK}")
        table_size += 1 + len(raw) + 4 + 4 * entries[name].ndim + 8

    payload_start = _align4(_HEADER.size + table_size)
    blob = bytearray()
    blob += _HEADER.pack(
        BUNDLE_MAGIC, BUNDLE_VERSION, *config_to_fields(config), len(names)
    )
    offset = payload_start
    payload = bytearray()
    for name in names:
        arr = entries[name]
        raw = name.encode("ascii")
        blob += struct.pack("<B", len(raw)) + raw
        blob += struct.pack("<I", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += struct.pack("<Q", offset)
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        payload += data
        offset += len(data)
    blob += b"\x00" * (payload_start - len(blob))
    blob += payload
    with open(path, "wb") as fh:
        fh.write(blob)


def read_bundle(path) -> tuple[ClassifierConfig, ClassifierParams]:
    """Parse a weight bundle and rebuild validated parameters.

    Raises BundleFormatError for malformed bytes, BundleConsistencyError
    when entries are missing or shaped inconsistently with the config,
    and StabilityError when any state-transition coefficient in ``a`` is
    not strictly negative. Unknown entries are skipped with a warning.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise BundleFormatError(f"bundle {path}: truncated header ({len(blob)} bytes)")
    magic, version, *fields, count = _HEADER.unpack_from(blob, 0)
    if magic != BUNDLE_MAGIC:
        raise BundleFormatError(f"bundle {path}: bad magic {magic!r}")
    if version != BUNDLE_VERSION:
        raise BundleFormatError(f"bundle {path}: unsupported version {version}")

    entries: dict[str, np.ndarray] = {}
    cursor = _HEADER.size
    for _ in range(count):
        if cursor + 1 > len(blob):
            raise BundleFormatError(f"bundle {path}: truncated entry table")
        (name_len,) = struct.unpack_from("<B", blob, cursor)
        cursor += 1
        if name_len == 0 or cursor + name_len > len(blob):
            raise BundleFormatError(f"bundle {path}: bad entry name length {name_len}")
        try:
            name = blob[cursor : cursor + name_len].decode("ascii")
        except UnicodeDecodeError as exc:
            raise BundleFormatError(f"bundle {path}: entry name is not ascii") from exc
        cursor += name_len
        if cursor + 4 > len(blob):
            raise BundleFormatError(f"bundle {path}: truncated entry table")
        (rank,) = struct.unpack_from("<I", blob, cursor)
        cursor += 4
        if not 1 <= rank <= MAX_RANK:
            raise BundleFormatError(f"bundle {path}: entry {name!r} has rank {rank}")
        if cursor + 4 * rank + 8 > len(blob):
            raise BundleFormatError(f"bundle {path}: truncated entry table")
        dims = struct.unpack_from(f"<{rank}I", blob, cursor)
        cursor += 4 * rank
        (offset,) = struct.unpack_from("<Q", blob, cursor)
        cursor += 8
        if any(d < 1 for d in dims):
            raise BundleFormatError(f"bundle {path}: entry {name!r} has empty dim in {dims}")
        nbytes = 4 * math.prod(dims)
        if offset % 4 != 0:
            raise BundleFormatError(f"bundle {path}: entry {name!r} offset {offset} misaligned")
        if offset + nbytes > len(blob):
            raise BundleFormatError(f"bundle {path}: entry {name!r} data is truncated")
        if name in entries:
            raise BundleFormatError(f"bundle {path}: duplicate entry {name!r}")
        data = np.frombuffer(blob, dtype="<f4", count=nbytes // 4, offset=offset)
        entries[name] = data.astype(np.float32).reshape(dims)

    unknown = sorted(set(entries) - set(REQUIRED_ENTRIES))
    for name in unknown:
        warnings.warn(f"bundle {path}: ignoring unknown entry {name!r}", stacklevel=2)
        del entries[name]

    config = config_from_fields(tuple(fields))
    params = params_from_entries(entries)
    try:
        params.validate(config)
    except Exception as exc:
        raise BundleConsistencyError(f"bundle {path}: {exc}") from exc
    if not np.all(params.block.A < 0.0):
        raise StabilityError(
            f"bundle {path}: entry 'a' must be strictly negative for a decaying state"
        )
    return config, params


def write_features(path, samples, labels=None) -> None:
    """Serialize rank-2 fp32 matrices, optionally one u32 label each."""
    samples = [np.ascontiguousarray(s, dtype="<f4") for s in samples]
    for i, s in enumerate(samples):
        if s.ndim != 2:
            raise BundleConsistencyError(f"features: sample {i} has rank {s.ndim}, expected 2")
    if labels is not None:
        if len(labels) != len(samples):
            raise BundleConsistencyError(
                f"features: {len(labels)} labels for {len(samples)} samples"
            )
        for i, label in enumerate(labels):
            if not 0 <= int(label) < 2**32:
                raise BundleConsistencyError(f"features: label {label} at index {i} not a u32")
    blob = bytearray()
    blob += FEATURES_MAGIC
    blob += struct.pack("<II", len(samples), 0 if labels is None else 1)
    for i, s in enumerate(samples):
        blob += struct.pack("<II", s.shape[0], s.shape[1])
        blob += s.tobytes()
        if labels is not None:
            blob += struct.pack("<I", int(labels[i]))
    with open(path, "wb") as fh:
        fh.write(blob)


def read_features(path):
    """Inverse of write_features: (samples, labels-or-None)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise BundleFormatError(f"features {path}: truncated header ({len(blob)} bytes)")
    if blob[:4] != FEATURES_MAGIC:
        raise BundleFormatError(f"features {path}: bad magic {blob[:4]!r}")
    count, label_flag = struct.unpack_from("<II", blob, 4)
    if label_flag not in (0, 1):
        raise BundleFormatError(f"features {path}: bad label flag {label_flag}")
    cursor = 12
    samples: list[np.ndarray] = []
    labels: list[int] = []
    for i in range(count):
        if cursor + 8 > len(blob):
            raise BundleFormatError(f"features {path}: truncated at sample {i}")
        rows, cols = struct.unpack_from("<II", blob, cursor)
        cursor += 8
        if rows < 1 or cols < 1:
            raise BundleFormatError(f"features {path}: sample {i} has empty shape {(rows, cols)}")
        nbytes = 4 * rows * cols
        if cursor + nbytes > len(blob):
            raise BundleFormatError(f"features {path}: sample {i} data is truncated")
        data = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=cursor)
        samples.append(data.astype(np.float32).reshape(rows, cols))
        cursor += nbytes
        if label_flag:
            if cursor + 4 > len(blob):
                raise BundleFormatError(f"features {path}: sample {i} label is truncated")
            (label,) = struct.unpack_from("<I", blob, cursor)
            labels.append(int(label))
            cursor += 4
    return samples, (labels if label_flag else None)
