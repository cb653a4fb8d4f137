import functools
from pathlib import Path

import pytest

from deconfuse.generate import corpus

FIXTURES = Path(__file__).parent / "fixtures"

# main corpus: up to 12 transitions, presets of at most 2 places
CORPUS_ARGS = dict(count=100, max_transitions=12, max_width=2)
# event-structure comparison corpus: up to 8 transitions, width 3
AB_CORPUS_ARGS = dict(count=50, max_transitions=8, max_width=3)


@functools.lru_cache(maxsize=None)
def main_corpus():
    return tuple(corpus(**CORPUS_ARGS))


@functools.lru_cache(maxsize=None)
def ab_corpus():
    return tuple(corpus(**AB_CORPUS_ARGS))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# ---------------------------------------------------------------- acceptance summary

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if not crit:
        return
    num, title = crit
    entry = _criteria.setdefault(num, {"title": title, "ok": True, "tests": 0})
    entry["tests"] += 1
    entry["ok"] &= report.outcome == "passed"


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        verdict = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2} {verdict}  {e['title']} ({e['tests']} tests)")
