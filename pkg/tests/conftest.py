import pytest

from bbauth.synth import GenConfig, generate_dataset


@pytest.fixture(scope="session")
def tiny_generated():
    """Small three-split dataset shared by tests that need real structure."""
    return generate_dataset(
        GenConfig(n_users=2, n_train_users=2, n_validation_users=2, master_seed=7)
    )


@pytest.fixture(scope="session")
def default_generated():
    """The frozen benchmark configuration (8 users, seed 42)."""
    return generate_dataset(GenConfig())
