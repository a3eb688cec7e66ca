"""Shared fixtures for alohacalc tests."""

import shutil
import tempfile
from pathlib import Path

import pytest
from hypothesis import settings

from alohacalc.core.topology import BipartiteTopology
from alohacalc.utils.csv_format import read_csv

settings.register_profile("alohacalc", derandomize=True, deadline=None, max_examples=200)
settings.load_profile("alohacalc")


def pytest_addoption(parser):
    """Add custom command-line options."""
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run long Monte Carlo checks marked slow"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def fixtures_dir():
    """Return the fixtures directory path."""
    return Path(__file__).parent / 'fixtures'


@pytest.fixture
def configs_dir():
    """Return the shipped preset configs directory."""
    return Path(__file__).parent.parent / 'configs'


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def table1_topology():
    """Two receivers; class 1 to receiver 1, class 2 to receiver 2, class 3 to both."""
    return BipartiteTopology(((1, 0), (0, 1), (1, 1)))


@pytest.fixture
def table1_rows(fixtures_dir):
    """Golden rows as {load: decoded}."""
    header, rows = read_csv(fixtures_dir / 'table1.csv')
    assert header == ["n_1", "n_2", "n_3", "phi_1", "phi_2", "phi_3"]
    table = {}
    for row in rows:
        values = tuple(int(v) for v in row)
        table[values[:3]] = values[3:]
    return table
