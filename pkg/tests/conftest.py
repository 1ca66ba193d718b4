import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from igabem import models, verification

settings.register_profile("igabem", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("igabem")


def _no_inclusions(doc):
    doc = dict(doc)
    doc["inclusions"] = []
    return doc


SCENARIOS = {
    "test1": lambda ratio, d, option=2: models.test1(ratio, d, option=option),
    "test2": lambda ratio=2.0: models.test2(ratio),
    "test3": lambda: models.test3(),
    "test3_plain": lambda: _no_inclusions(models.test3()),
    "cube": lambda: _no_inclusions(models.test1(2.0, 0.2)),
}


@pytest.fixture(scope="session")
def solved():
    """Assembled and solved models cached for the whole session.

    ``solved("test1", 2.0, 0.2, 1)`` returns a :class:`verification.RunResult`.
    """
    cache = {}

    def get(name, *args):
        key = (name, args)
        if key not in cache:
            cache[key] = verification.run(SCENARIOS[name](*args))
        return cache[key]
    return get


@pytest.fixture(scope="session")
def test3_table():
    return verification.test3_table()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance report ----------------------------------------------------------
_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    num, title = mark.args
    ok = _CRITERIA.get(num, (title, True))[1] and not rep.failed
    if rep.when == "call" or rep.failed:
        _CRITERIA[num] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}")
