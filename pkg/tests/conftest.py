import numpy as np
import pytest

from network.models import NetworkConfig
from network.scenarios import get_scenario


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_config() -> NetworkConfig:
    """Three legitimate UDs, one jammer, short episode and a tiny network."""
    return NetworkConfig(
        num_uds=3,
        num_jammers=1,
        num_antennas=4,
        slots_per_frame=5,
        num_frames=20,
        learning={
            "batch_size": 4,
            "replay_capacity": 64,
            "hidden_width": 8,
            "residual_blocks": 1,
            "sync_period": 5,
        },
    )


@pytest.fixture
def d1_config() -> NetworkConfig:
    return get_scenario("D1")


@pytest.fixture
def log_to_tmp(tmp_path, monkeypatch):
    """Keep CLI log files out of the home directory."""
    monkeypatch.setenv("SCLAR_LOG_FILE", str(tmp_path / "logs" / "sclar-sim.log"))
    monkeypatch.setenv("LOGFIRE_ENABLED", "false")
    return tmp_path
