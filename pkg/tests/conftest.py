from __future__ import annotations

from collections import OrderedDict
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=200, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

DATA = Path(str(resources.files("dravbias.data")))

# criterion number -> [title, failed?, test count]
_CRITERIA: "OrderedDict[int, list]" = OrderedDict()
_NODE_CRITERION: dict[str, int] = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is None or not mark.args:
            continue
        number, title = mark.args[0], mark.args[1]
        _NODE_CRITERION[item.nodeid] = number
        _CRITERIA.setdefault(number, [title, False, 0])[2] += 1


def pytest_runtest_logreport(report):
    number = _NODE_CRITERION.get(report.nodeid)
    if number is None:
        return
    if report.failed or (report.when == "call" and report.skipped):
        _CRITERIA[number][1] = True


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, failed, count = _CRITERIA[number]
        status = "FAIL" if failed else "PASS"
        plural = "" if count == 1 else "s"
        terminalreporter.write_line(f"[{status}] {number}. {title} ({count} test{plural})")


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def profession_corpus_path() -> Path:
    return DATA / "corpora" / "profession_telugu_100.jsonl"


@pytest.fixture
def worked_corpus_path() -> Path:
    return DATA / "corpora" / "worked_examples.jsonl"
