import pytest

from tinyssm import ClassifierConfig, MambaConfig, preset_config


@pytest.fixture
def kws3_config():
    return preset_config("kws3")


@pytest.fixture
def har_config():
    return preset_config("har")


@pytest.fixture
def tiny_config():
    """Small shapes so property loops stay fast."""
    return ClassifierConfig(
        input_dim=5,
        d_model=8,
        seq_len=12,
        num_classes=3,
        mamba=MambaConfig(d_model=8, d_state=4, d_conv=3, expand=2, dt_rank=2),
    )
