import functools

import pytest

from elapsedtime.config import load_preset
from elapsedtime.scenarios import build, simulate

_CRITERIA_KEY = pytest.StashKey[dict]()


@functools.lru_cache(maxsize=None)
def preset_run(name):
    """(built, trajectory) for a preset, computed once per session."""
    built = build(load_preset(name))
    return built, simulate(built, built.cfg.snapshot_times)


def pytest_configure(config):
    config.stash[_CRITERIA_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: criterion(number, passed, detail)."""
    table = request.config.stash[_CRITERIA_KEY]

    def record(number, passed, detail):
        table[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_CRITERIA_KEY, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        passed, detail = table[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
