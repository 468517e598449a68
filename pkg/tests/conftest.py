import json
from pathlib import Path

import pytest
from hypothesis import settings

from bwmedge.distributions import make_distribution

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def expo():
    return make_distribution("exponential", rate=1.0)


@pytest.fixture(scope="session")
def normal_table():
    return json.loads((DATA / "normal_cdf_reference.json").read_text())


@pytest.fixture(scope="session")
def gamma_table():
    return json.loads((DATA / "gammainc_reference.json").read_text())


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
