import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from circuit_compiler import compile_circuit  # noqa: E402
from data.network_format import read_network  # noqa: E402

NETWORKS = ROOT / "data" / "networks"


@pytest.fixture
def networks_dir() -> Path:
    return NETWORKS


@pytest.fixture
def ab_network():
    """A -> B: theta_a = .5, theta_b|a = .2, theta_b|a_bar = .6."""
    return read_network(NETWORKS / "ab.json")


@pytest.fixture
def ab_circuit(ab_network):
    return compile_circuit(ab_network)


@pytest.fixture
def symmetric_network():
    return read_network(NETWORKS / "symmetric.json")
