import struct

import numpy as np
import pytest

from ssm_exporter import (
    ENTRY_ORDER,
    FormatError,
    read_bundle,
    read_features,
    write_bundle,
    write_features,
)

FIELDS = (8, 16, 20, 3, 4, 3, 2, 2, 0)


def small_entries(rng) -> dict[str, np.ndarray]:
    return {
        name: rng.standard_normal((2, 3)).astype(np.float32) for name in ENTRY_ORDER
    }


class TestBundle:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        entries = small_entries(rng)
        path = tmp_path / "w.mlmw"
        write_bundle(path, FIELDS, entries)
        fields, got = read_bundle(path)
        assert fields == FIELDS
        assert set(got) == set(entries)
        for name in entries:
            assert np.array_equal(got[name], entries[name])

    def test_layout_starts_with_magic_and_version(self, tmp_path):
        path = tmp_path / "w.mlmw"
        write_bundle(path, FIELDS, small_entries(np.random.default_rng(1)))
        blob = path.read_bytes()
        assert blob[:4] == b"MLMW"
        assert struct.unpack_from("<I", blob, 4) == (1,)
        assert struct.unpack_from("<9I", blob, 8) == FIELDS

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(2)
        entries = small_entries(rng)
        a, b = tmp_path / "a.mlmw", tmp_path / "b.mlmw"
        write_bundle(a, FIELDS, entries)
        write_bundle(b, FIELDS, entries)
        assert a.read_bytes() == b.read_bytes()

    def test_extra_entries_sort_after_canonical_ones(self, tmp_path):
        rng = np.random.default_rng(3)
        entries = small_entries(rng)
        entries["aux_stats"] = np.ones(4, dtype=np.float32)
        path = tmp_path / "w.mlmw"
        write_bundle(path, FIELDS, entries)
        _, got = read_bundle(path)
        assert "aux_stats" in got
        assert np.array_equal(got["aux_stats"], entries["aux_stats"])

    def test_wrong_field_count_rejected(self, tmp_path):
        with pytest.raises(FormatError, match="config fields"):
            write_bundle(tmp_path / "w.mlmw", (1, 2, 3), {})

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "w.mlmw"
        write_bundle(path, FIELDS, small_entries(np.random.default_rng(4)))
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(blob)
        with pytest.raises(FormatError, match="magic"):
            read_bundle(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "w.mlmw"
        write_bundle(path, FIELDS, small_entries(np.random.default_rng(5)))
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 3])
        with pytest.raises(FormatError):
            read_bundle(path)


class TestFeatures:
    def test_round_trip_with_labels(self, tmp_path):
        rng = np.random.default_rng(6)
        samples = [rng.standard_normal((4, 2)).astype(np.float32) for _ in range(3)]
        path = tmp_path / "f.mlmf"
        write_features(path, samples, labels=[0, 2, 1])
        got, labels = read_features(path)
        assert labels == [0, 2, 1]
        assert all(np.array_equal(a, b) for a, b in zip(got, samples))

    def test_round_trip_without_labels(self, tmp_path):
        path = tmp_path / "f.mlmf"
        write_features(path, [np.zeros((2, 5), dtype=np.float32)])
        got, labels = read_features(path)
        assert labels is None
        assert got[0].shape == (2, 5)

    def test_label_count_mismatch_rejected(self, tmp_path):
        with pytest.raises(FormatError, match="labels"):
            write_features(
                tmp_path / "f.mlmf", [np.zeros((1, 1), dtype=np.float32)], labels=[1, 2]
            )

    def test_rank_1_sample_rejected(self, tmp_path):
        with pytest.raises(FormatError, match="rank"):
            write_features(tmp_path / "f.mlmf", [np.zeros(4, dtype=np.float32)])

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "f.mlmf"
        write_features(path, [np.ones((3, 3), dtype=np.float32)])
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 4])
        with pytest.raises(FormatError, match="truncated"):
            read_features(path)
