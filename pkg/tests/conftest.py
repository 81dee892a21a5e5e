import pytest

from cssim.config import ScenarioConfig
from cssim.protocol import scenario_corpus
from cssim.cli import demo_config_path


@pytest.fixture(scope="session")
def demo_config():
    return ScenarioConfig.load(demo_config_path())


@pytest.fixture(scope="session")
def demo_corpus(demo_config):
    return scenario_corpus(demo_config)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``acceptance(n, "summary")`` once the measurement is known; the
    line is marked FAIL automatically if the test body fails afterwards.
    """
    lines = request.config.stash[_ACCEPTANCE]
    entry = {}

    def record(number, summary):
        entry.update(number=number, summary=summary)

    yield record
    if entry:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        lines.append(f"criterion {entry['number']}: {'PASS' if ok else 'FAIL'} - {entry['summary']}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
