import dataclasses

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ermon.phy_tx import FrameConfig

settings.register_profile("ermon", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ermon")


@pytest.fixture(scope="session")
def ref_cfg():
    return FrameConfig()


@pytest.fixture(scope="session")
def short_cfg():
    """Reference numerology with a handful of data symbols."""
    return FrameConfig(n_data_symbols=8)


@pytest.fixture(scope="session")
def small_cfg():
    """Small numerology for fast property tests."""
    return FrameConfig(n_subcarriers=64, n_guard_total=12, n_pilots=4, n_reserved=2, cp_len=8,
                       sample_rate=1e6, n_data_symbols=6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def with_data(cfg, n):
    return dataclasses.replace(cfg, n_data_symbols=n)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
