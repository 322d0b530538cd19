import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE / "oracles"))


def load_fixture(name):
    return json.loads((HERE / "fixtures" / name).read_text())


@pytest.fixture(scope="session")
def toymac_vectors():
    return load_fixture("toymac_vectors.json")


@pytest.fixture(scope="session")
def type_id_values():
    return load_fixture("type_ids.json")


@pytest.fixture(scope="session")
def guess_values():
    return load_fixture("guess_values.json")


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, title = mark.args
    status = "DECLARED" if rep.skipped else "FAIL" if rep.failed else "PASS"
    if _CRITERIA.get(n, (None, None))[1] != "FAIL":
        _CRITERIA[n] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n} [{title}]: {status}")
