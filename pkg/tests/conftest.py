"""Shared fixtures."""
import numpy as np
import pytest


# ================================================================
#  Fixtures
# ================================================================
@pytest.fixture
def temp_dir(tmp_path):
    return tmp_path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _no_seed_from_environment(monkeypatch):
    monkeypatch.delenv("HETCUSUM_SEED", raising=False)
