import dataclasses

import numpy as np
import pytest

import oracles
from tinyssm import (
    ClassifierConfig,
    DimensionError,
    MambaConfig,
    classifier_forward,
    classifier_trace,
    mean_pool_time,
    predict,
    preset_config,
    synth_features,
    synth_params,
)
from test_mamba_block import zero_params


class TestPresets:
    def test_kws_presets(self):
        for name, classes in (("kws3", 3), ("kws10", 10)):
            config = preset_config(name)
            assert (config.input_dim, config.d_model, config.seq_len) == (40, 64, 100)
            assert config.num_classes == classes
            assert config.mamba.d_inner == 128
            assert config.mamba.d_state == 16

    def test_har_preset(self):
        config = preset_config("har")
        assert (config.input_dim, config.seq_len, config.num_classes) == (57, 10, 6)

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset_config("kws99")


class TestConfigValidation:
    def test_d_model_must_match_block(self):
        with pytest.raises(DimensionError):
            ClassifierConfig(
                input_dim=4, d_model=8, seq_len=5, num_classes=2, mamba=MambaConfig(d_model=16)
            )

    def test_unknown_pooling_rejected(self):
        with pytest.raises(DimensionError):
            ClassifierConfig(
                input_dim=4,
                d_model=8,
                seq_len=5,
                num_classes=2,
                mamba=MambaConfig(d_model=8),
                pooling="median",
            )


class TestForward:
    def test_zero_params_give_zero_logits_and_class_zero(self, tiny_config):
        params = synth_params(tiny_config, 0)
        zero = dataclasses.replace(
            params,
            W_proj=np.zeros_like(params.W_proj),
            b_proj=np.zeros_like(params.b_proj),
            W_head=np.zeros_like(params.W_head),
            b_head=np.zeros_like(params.b_head),
        )
        zero.block = zero_params(tiny_config.mamba)
        features = np.random.default_rng(1).standard_normal((12, 5)).astype(np.float32)
        logits = classifier_forward(zero, features, tiny_config)
        assert np.array_equal(logits, np.zeros(3, dtype=np.float32))
        assert predict(zero, features, tiny_config) == 0

    def test_har_output_length(self):
        config = preset_config("har")
        params = synth_params(config, 3)
        features = synth_features(config, 4, 1)[0]
        assert classifier_forward(params, features, config).shape == (6,)

    def test_matches_fp64_pipeline_oracle(self):
        config = preset_config("kws3")
        params = synth_params(config, 5)
        for features in synth_features(config, 6, 3):
            got = classifier_forward(params, features, config)
            want = oracles.classifier_oracle(params, features, config)
            assert np.abs(got.astype(np.float64) - want).max() <= 1e-4

    def test_fused_and_reference_logits_bitwise_equal(self, tiny_config):
        params = synth_params(tiny_config, 7)
        for features in synth_features(tiny_config, 8, 10):
            fused = classifier_forward(params, features, tiny_config, scan="fused")
            ref = classifier_forward(params, features, tiny_config, scan="reference")
            assert np.array_equal(fused, ref)

    def test_max_pooling_config(self, tiny_config):
        config = dataclasses.replace(tiny_config, pooling="max")
        params = synth_params(config, 9)
        features = synth_features(config, 10, 1)[0]
        trace = classifier_trace(params, features, config)
        want = oracles.max_pool_oracle(trace.mamba_out.astype(np.float64))
        pooled_then_head = (
            want @ np.asarray(params.W_head, dtype=np.float64).T
            + np.asarray(params.b_head, dtype=np.float64)
        )
        assert np.abs(trace.logits.astype(np.float64) - pooled_then_head).max() <= 1e-5

    def test_wrong_feature_shape_rejected(self, tiny_config):
        params = synth_params(tiny_config, 11)
        with pytest.raises(DimensionError):
            classifier_forward(params, np.zeros((12, 6), dtype=np.float32), tiny_config)

    def test_unknown_scan_path_rejected(self, tiny_config):
        params = synth_params(tiny_config, 12)
        features = synth_features(tiny_config, 13, 1)[0]
        with pytest.raises(ValueError):
            classifier_forward(params, features, tiny_config, scan="quantum")


class TestSynthParams:
    def test_same_seed_bit_identical(self, tiny_config):
        a = synth_params(tiny_config, 42)
        b = synth_params(tiny_config, 42)
        assert np.array_equal(a.W_proj, b.W_proj)
        assert np.array_equal(a.block.A, b.block.A)
        assert np.array_equal(a.W_head, b.W_head)

    def test_different_seeds_differ(self, tiny_config):
        a = synth_params(tiny_config, 0)
        b = synth_params(tiny_config, 1)
        assert not np.array_equal(a.W_proj, b.W_proj)

    def test_state_matrix_negative_for_100_seeds(self, tiny_config):
        for seed in range(100):
            assert np.all(synth_params(tiny_config, seed).block.A < 0.0)

    def test_shapes_validate_for_all_presets(self):
        for name in ("kws3", "kws10", "har"):
            config = preset_config(name)
            synth_params(config, 0).validate(config)


class TestSynthFeatures:
    def test_shapes_and_determinism(self, tiny_config):
        a = synth_features(tiny_config, 3, 4)
        b = synth_features(tiny_config, 3, 4)
        assert len(a) == 4
        for s, t in zip(a, b):
            assert s.shape == (12, 5)
            assert s.dtype == np.float32
            assert np.array_equal(s, t)


class TestProperties:
    def test_mean_pooling_is_permutation_invariant(self):
        rng = np.random.default_rng(14)
        rows = rng.standard_normal((9, 6)).astype(np.float32)
        shuffled = rows[rng.permutation(9)]
        np.testing.assert_allclose(
            mean_pool_time(rows), mean_pool_time(shuffled), atol=1e-6
        )

    def test_logits_finite_across_1000_seeds(self):
        config = ClassifierConfig(
            input_dim=3,
            d_model=4,
            seq_len=6,
            num_classes=2,
            mamba=MambaConfig(d_model=4, d_state=2, d_conv=2, expand=1, dt_rank=1),
        )
        for seed in range(1000):
            params = synth_params(config, seed)
            features = synth_features(config, seed + 1, 1)[0]
            assert np.all(np.isfinite(classifier_forward(params, features, config)))
