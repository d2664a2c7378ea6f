import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rwhec.simulate import SimConfig, generate, synth_camera_dataset

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sim_unit():
    return generate(SimConfig(seed=3), trial=0)


@pytest.fixture(scope="session")
def synth_clean():
    return synth_camera_dataset(seed=0)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    if rep.when == "call":
        item.rep_call = rep
    if rep.skipped and item.module.__name__.endswith("test_acceptance"):
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
        ACCEPTANCE.append(f"SKIP  {item.name.removeprefix('test_')}: {reason.removeprefix('Skipped: ')}")
