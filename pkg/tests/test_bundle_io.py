import dataclasses
import struct

import numpy as np
import pytest

from tinyssm import (
    BundleConsistencyError,
    BundleError,
    BundleFormatError,
    ClassifierConfig,
    MambaConfig,
    StabilityError,
    preset_config,
    read_bundle,
    read_features,
    synth_features,
    synth_params,
    write_bundle,
    write_features,
)
from tinyssm.bundle_io import REQUIRED_ENTRIES, entries_from_params


def random_config(rng) -> ClassifierConfig:
    d_model = int(rng.integers(1, 17))
    mamba = MambaConfig(
        d_model=d_model,
        d_state=int(rng.integers(1, 9)),
        d_conv=int(rng.integers(1, 5)),
        expand=int(rng.integers(1, 3)),
        dt_rank=int(rng.integers(1, 5)),
    )
    return ClassifierConfig(
        input_dim=int(rng.integers(1, 13)),
        d_model=d_model,
        seq_len=int(rng.integers(1, 21)),
        num_classes=int(rng.integers(1, 7)),
        mamba=mamba,
        pooling="max" if rng.integers(0, 2) else "mean",
    )


def assert_params_equal(a, b):
    ea, eb = entries_from_params(a), entries_from_params(b)
    assert ea.keys() == eb.keys()
    for name in ea:
        assert np.array_equal(ea[name], eb[name]), f"entry {name} changed in round trip"


class TestBundleRoundTrip:
    def test_preset_round_trip_is_bit_identical(self, tmp_path):
        config = preset_config("kws3")
        params = synth_params(config, 17)
        path = tmp_path / "weights.mlmw"
        write_bundle(path, config, params)
        got_config, got_params = read_bundle(path)
        assert got_config == config
        assert_params_equal(got_params, params)

    def test_random_configs_round_trip(self, tmp_path):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            config = random_config(rng)
            params = synth_params(config, seed)
            path = tmp_path / f"b{seed}.mlmw"
            write_bundle(path, config, params)
            got_config, got_params = read_bundle(path)
            assert got_config == config
            assert_params_equal(got_params, params)

    def test_two_writes_byte_identical(self, tmp_path):
        config = preset_config("har")
        params = synth_params(config, 3)
        p1, p2 = tmp_path / "a.mlmw", tmp_path / "b.mlmw"
        write_bundle(p1, config, params)
        write_bundle(p2, config, params)
        assert p1.read_bytes() == p2.read_bytes()

    def test_max_pooling_flag_round_trips(self, tmp_path):
        config = dataclasses.replace(preset_config("har"), pooling="max")
        params = synth_params(config, 5)
        path = tmp_path / "m.mlmw"
        write_bundle(path, config, params)
        got_config, _ = read_bundle(path)
        assert got_config.pooling == "max"


class TestBundleValidation:
    def make_bundle(self, tmp_path, seed=0):
        config = ClassifierConfig(
            input_dim=3,
            d_model=4,
            seq_len=5,
            num_classes=2,
            mamba=MambaConfig(d_model=4, d_state=2, d_conv=2, expand=2, dt_rank=1),
        )
        params = synth_params(config, seed)
        path = tmp_path / "v.mlmw"
        write_bundle(path, config, params)
        return path, config, params

    def test_positive_state_matrix_rejected(self, tmp_path):
        path, config, params = self.make_bundle(tmp_path)
        bad_block = dataclasses.replace(params.block, A=np.abs(params.block.A))
        bad = dataclasses.replace(params, block=bad_block)
        write_bundle(path, config, bad)
        with pytest.raises(StabilityError):
            read_bundle(path)

    def test_unknown_entry_warns_and_is_ignored(self, tmp_path):
        path, config, params = self.make_bundle(tmp_path)
        write_bundle(
            path, config, params, extra_entries={"zz_extra": np.ones(4, dtype=np.float32)}
        )
        with pytest.warns(UserWarning, match="zz_extra"):
            got_config, got_params = read_bundle(path)
        assert got_config == config
        assert_params_equal(got_params, params)

    def test_bad_magic(self, tmp_path):
        path, _, _ = self.make_bundle(tmp_path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(blob)
        with pytest.raises(BundleFormatError, match="magic"):
            read_bundle(path)

    def test_bad_version(self, tmp_path):
        path, _, _ = self.make_bundle(tmp_path)
        blob = bytearray(path.read_bytes())
        struct.pack_into("<I", blob, 4, 99)
        path.write_bytes(blob)
        with pytest.raises(BundleFormatError, match="version"):
            read_bundle(path)

    def test_truncated_header(self, tmp_path):
        path, _, _ = self.make_bundle(tmp_path)
        path.write_bytes(path.read_bytes()[:20])
        with pytest.raises(BundleFormatError, match="truncated"):
            read_bundle(path)

    def test_truncated_payload(self, tmp_path):
        path, _, _ = self.make_bundle(tmp_path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 5])
        with pytest.raises(BundleFormatError):
            read_bundle(path)

    def test_shape_mismatch_is_consistency_error(self, tmp_path):
        path, config, params = self.make_bundle(tmp_path)
        wrong = dataclasses.replace(
            config,
            seq_len=config.seq_len,
            num_classes=config.num_classes + 1,
        )
        write_bundle(path, wrong, params)
        with pytest.raises(BundleConsistencyError):
            read_bundle(path)

    def test_zero_config_field_is_typed_error(self, tmp_path):
        path, _, _ = self.make_bundle(tmp_path)
        blob = bytearray(path.read_bytes())
        struct.pack_into("<I", blob, 8, 0)  # first config field: input_dim
        path.write_bytes(blob)
        with pytest.raises(BundleError):
            read_bundle(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            read_bundle(tmp_path / "absent.mlmw")


class TestFeatureFiles:
    def test_round_trip_without_labels(self, tmp_path):
        config = preset_config("har")
        samples = synth_features(config, 2, 5)
        path = tmp_path / "f.mlmf"
        write_features(path, samples)
        got, labels = read_features(path)
        assert labels is None
        assert len(got) == 5
        for a, b in zip(got, samples):
            assert a.shape == (10, 57)
            assert np.array_equal(a, b)

    def test_round_trip_with_labels(self, tmp_path):
        rng = np.random.default_rng(6)
        samples = [rng.standard_normal((4, 3)).astype(np.float32) for _ in range(3)]
        path = tmp_path / "f.mlmf"
        write_features(path, samples, labels=[2, 0, 1])
        got, labels = read_features(path)
        assert labels == [2, 0, 1]
        assert all(np.array_equal(a, b) for a, b in zip(got, samples))

    def test_jagged_sample_shapes_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        samples = [
            rng.standard_normal((rows, cols)).astype(np.float32)
            for rows, cols in [(1, 1), (5, 2), (2, 9)]
        ]
        path = tmp_path / "j.mlmf"
        write_features(path, samples)
        got, _ = read_features(path)
        assert [s.shape for s in got] == [(1, 1), (5, 2), (2, 9)]

    def test_empty_file_round_trips(self, tmp_path):
        path = tmp_path / "e.mlmf"
        write_features(path, [])
        got, labels = read_features(path)
        assert got == [] and labels is None

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(8)
        samples = [rng.standard_normal((3, 3)).astype(np.float32)]
        p1, p2 = tmp_path / "a.mlmf", tmp_path / "b.mlmf"
        write_features(p1, samples, labels=[1])
        write_features(p2, samples, labels=[1])
        assert p1.read_bytes() == p2.read_bytes()

    def test_label_count_mismatch_rejected(self, tmp_path):
        with pytest.raises(BundleConsistencyError):
            write_features(tmp_path / "x.mlmf", [np.ones((2, 2), dtype=np.float32)], labels=[1, 2])

    def test_rank_1_sample_rejected(self, tmp_path):
        with pytest.raises(BundleConsistencyError):
            write_features(tmp_path / "x.mlmf", [np.ones(4, dtype=np.float32)])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "x.mlmf"
        path.write_bytes(b"JUNKJUNKJUNKJUNK")
        with pytest.raises(BundleFormatError, match="magic"):
            read_features(path)

    def test_truncated_sample_rejected(self, tmp_path):
        path = tmp_path / "x.mlmf"
        write_features(path, [np.ones((4, 4), dtype=np.float32)])
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 8])
        with pytest.raises(BundleFormatError, match="truncated"):
            read_features(path)


def test_required_entry_list_is_complete():
    config = preset_config("har")
    params = synth_params(config, 1)
    assert tuple(entries_from_params(params).keys()) == REQUIRED_ENTRIES
