"""Writers and readers for the engine's binary artifacts.

Weight bundle (.mlmw), all integers little-endian:

    magic    4 bytes  "MLMW"
    version  u32      1
    config   9 x u32  input_dim, d_model, seq_len, num_classes,
                      d_state, d_conv, expand, dt_rank, pooling code
                      (0 = mean, 1 = max)
    count    u32      number of table entries
    table    per entry: u8 name length, ascii name, u32 rank,
                        rank x u32 dims, u64 absolute payload offset
    payload  fp32 data, first offset aligned to 4 bytes

Feature file (.mlmf):

    magic      4 bytes  "MLMF"
    count      u32      number of samples
    label_flag u32      1 when a u32 label follows each sample
    per sample u32 rows, u32 cols, rows*cols fp32 values, optional label

This module deliberately shares no code with the inference engine; the
byte layout above is the only coupling between the two packages.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

BUNDLE_MAGIC = b"MLMW"
BUNDLE_VERSION = 1
FEATURES_MAGIC = b"MLMF"

POOLING_CODES = {"mean": 0, "max": 1}
POOLING_NAMES = {code: name for name, code in POOLING_CODES.items()}

ENTRY_ORDER = (
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

_HEADER = struct.Struct("<4s11I")


def write_bundle(path, config_fields: tuple[int, ...], entries: dict[str, np.ndarray]) -> None:
    """Serialize entries after the 9 config fields; canonical names first.

    No shape checking happens here on purpose: the engine's loader is the
    single gatekeeper, so a wrong manifest shows up as a load-time
    rejection rather than as two disagreeing validators.
    """
    if len(config_fields) != 9:
        raise FormatError(f"bundle: expected 9 config fields, got {len(config_fields)}")
    names = [n for n in ENTRY_ORDER if n in entries]
    names += sorted(set(entries) - set(ENTRY_ORDER))

    table = bytearray()
    arrays = []
    for name in names:
        arr = np.ascontiguousarray(entries[name], dtype="<f4")
        raw = name.encode("ascii")
        table += struct.pack("<B", len(raw)) + raw
        table += struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape)
        table += b"\x00" * 8  # offset backpatched below
        arrays.append(arr)

    start = _HEADER.size + len(table)
    start += (-start) % 4
    blob = bytearray(_HEADER.pack(BUNDLE_MAGIC, BUNDLE_VERSION, *config_fields, len(names)))
    blob += table
    blob += b"\x00" * (start - len(blob))

    cursor = _HEADER.size
    offset = start
    for name, arr in zip(names, arrays):
        cursor += 1 + len(name) + 4 + 4 * arr.ndim
        struct.pack_into("<Q", blob, cursor, offset)
        cursor += 8
        blob += arr.tobytes()
        offset += arr.nbytes
    with open(path, "wb") as fh:
        fh.write(blob)


def read_bundle(path) -> tuple[tuple[int, ...], dict[str, np.ndarray]]:
    """Parse a bundle back into (config fields, name -> fp32 array)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"bundle {path}: truncated header")
    magic, version, *fields, count = _HEADER.unpack_from(blob, 0)
    if magic != BUNDLE_MAGIC:
        raise FormatError(f"bundle {path}: bad magic {magic!r}")
    if version != BUNDLE_VERSION:
        raise FormatError(f"bundle {path}: unsupported version {version}")

    entries: dict[str, np.ndarray] = {}
    cursor = _HEADER.size
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<B", blob, cursor)
            cursor += 1
            name = blob[cursor : cursor + name_len].decode("ascii")
            cursor += name_len
            (rank,) = struct.unpack_from("<I", blob, cursor)
            cursor += 4
            dims = struct.unpack_from(f"<{rank}I", blob, cursor)
            cursor += 4 * rank
            (offset,) = struct.unpack_from("<Q", blob, cursor)
            cursor += 8
        except struct.error as exc:
            raise FormatError(f"bundle {path}: truncated entry table") from exc
        n_values = 1
        for d in dims:
            n_values *= d
        if offset + 4 * n_values > len(blob):
            raise FormatError(f"bundle {path}: entry {name!r} data out of bounds")
        data = np.frombuffer(blob, dtype="<f4", count=n_values, offset=offset)
        entries[name] = data.astype(np.float32).reshape(dims)
    return tuple(fields), entries


def write_features(path, samples, labels=None) -> None:
    """Write rank-2 fp32 samples, optionally with one u32 label each."""
    samples = [np.ascontiguousarray(s, dtype="<f4") for s in samples]
    for i, s in enumerate(samples):
        if s.ndim != 2:
            raise FormatError(f"features: sample {i} has rank {s.ndim}, expected 2")
    if labels is not None and len(labels) != len(samples):
        raise FormatError(f"features: {len(labels)} labels for {len(samples)} samples")
    blob = bytearray(FEATURES_MAGIC)
    blob += struct.pack("<II", len(samples), 0 if labels is None else 1)
    for i, s in enumerate(samples):
        blob += struct.pack("<II", s.shape[0], s.shape[1])
        blob += s.tobytes()
        if labels is not None:
            blob += struct.pack("<I", int(labels[i]))
    with open(path, "wb") as fh:
        fh.write(blob)


def read_features(path) -> tuple[list[np.ndarray], list[int] | None]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise FormatError(f"features {path}: truncated header")
    if blob[:4] != FEATURES_MAGIC:
        raise FormatError(f"features {path}: bad magic {blob[:4]!r}")
    count, label_flag = struct.unpack_from("<II", blob, 4)
    samples = []
    labels: list[int] | None = [] if label_flag else None
    cursor = 12
    for i in range(count):
        try:
            rows, cols = struct.unpack_from("<II", blob, cursor)
            cursor += 8
            n = rows * cols
            if cursor + 4 * n > len(blob):
                raise struct.error("short data")
            data = np.frombuffer(blob, dtype="<f4", count=n, offset=cursor)
            cursor += 4 * n
            samples.append(data.astype(np.float32).reshape(rows, cols))
            if labels is not None:
                (label,) = struct.unpack_from("<I", blob, cursor)
                cursor += 4
                labels.append(label)
        except struct.error as exc:
            raise FormatError(f"features {path}: truncated at sample {i}") from exc
    return samples, labels
