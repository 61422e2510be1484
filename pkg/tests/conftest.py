"""
Pytest configuration and shared fixtures
"""
from pathlib import Path
from typing import List

import pytest

import src.config.settings as settings_module
from src.ether.frame import Frame, MacAddress
from src.sim_core.engine import SimEngine


@pytest.fixture
def test_data_dir():
    """Return path to the bundled scenario documents"""
    return Path(__file__).parent.parent / "data" / "scenarios"


@pytest.fixture(autouse=True)
def reset_environment(monkeypatch, tmp_path):
    """Send reports to a temp dir and rebuild settings for every test"""
    for var in ("LOG_LEVEL", "LOG_FORMAT", "LOG_TO_FILE", "SIM_WORKERS", "DEFAULT_SEED"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("SIM_OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setattr(settings_module, "_settings", None)
    yield
    settings_module._settings = None


@pytest.fixture
def engine():
    return SimEngine(seed=7)


def mac(i: int) -> MacAddress:
    return MacAddress.from_octets([0x02, 0, 0, 0, (i >> 8) & 0xFF, i & 0xFF])


@pytest.fixture
def macs():
    """Eight distinct unicast addresses"""
    return [mac(i) for i in range(1, 9)]


class RecordingEndpoint:
    """Link endpoint that records what it receives and never transmits on its own"""

    def __init__(self, engine: SimEngine, name: str):
        self.engine = engine
        self.name = name
        self.received: List[tuple] = []
        self.tx_ready = 0

    def receive(self, frame: Frame, direction) -> None:
        self.received.append((self.engine.now(), frame))

    def on_tx_ready(self, direction) -> None:
        self.tx_ready += 1


@pytest.fixture
def endpoints(engine):
    return RecordingEndpoint(engine, "a"), RecordingEndpoint(engine, "b")
