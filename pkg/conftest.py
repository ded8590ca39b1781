from pathlib import Path

import pytest

from tca.core.config import get_settings
from tca.services.documents import load_automaton, load_trace

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def plain_settings(monkeypatch):
    """测试中关闭颜色并使用默认配置"""
    monkeypatch.setenv("TCA_COLOR", "never")
    monkeypatch.setenv("TCA_LOG_LEVEL", "WARNING")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def resource():
    return load_automaton(DATA_DIR / "resource.json")


@pytest.fixture
def resource_fixed():
    return load_automaton(DATA_DIR / "resource-fixed.json")


@pytest.fixture
def resource_no_prohibitions():
    return load_automaton(DATA_DIR / "resource-no-prohibitions.json")


@pytest.fixture
def no_norms():
    return load_automaton(DATA_DIR / "no-norms.json")


@pytest.fixture
def stress():
    return load_automaton(DATA_DIR / "stress-6.json")


@pytest.fixture
def resource_trace():
    return load_trace(DATA_DIR / "resource-trace.json")


@pytest.fixture
def late_release_trace():
    return load_trace(DATA_DIR / "late-release-trace.json")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行完整规模的验收套件")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
