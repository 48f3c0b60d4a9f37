import pytest

from ssm_exporter import train_toy
from toy_setup import toy_config


@pytest.fixture(scope="session")
def trained_ckpt(tmp_path_factory):
    """One toy training run shared by every test that needs a checkpoint."""
    path = tmp_path_factory.mktemp("ckpt") / "toy.pt"
    losses = train_toy(toy_config(), path)
    assert losses[-1] < losses[0], "toy training failed to reduce the loss"
    return path
