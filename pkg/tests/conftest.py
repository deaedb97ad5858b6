from pathlib import Path

import pytest

from ipdlab.game import GameTrace
from ipdlab.mock_server import MockChatServer

GOLDEN = Path(__file__).parent / "golden"


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


@pytest.fixture
def six_round_trace():
    """Six played rounds; with a 5-round window only rounds 2-6 are shown.

    Round 1 falls outside the window, so its content is arbitrary.
    """
    return GameTrace.from_actions("CCDCDD", "CDDDCD")


@pytest.fixture
def mock_server():
    servers = []

    def make(*args, **kwargs):
        srv = MockChatServer(*args, **kwargs).start()
        servers.append(srv)
        return srv

    yield make
    for srv in servers:
        srv.stop()


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("IPDLAB_TEST_KEY", "sk-test-secret-123")
    return "sk-test-secret-123"


# -- acceptance report: one line per criterion in the terminal summary --------------

_acceptance: list[tuple[str, str, str, float]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        label = item.callspec.id if hasattr(item, "callspec") else ""
        name = f"criterion {marker.args[0]}" + (f" [{label}]" if label else "")
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _acceptance.append((name, status, marker.args[1], rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, desc, secs in sorted(_acceptance, key=lambda r: (int(r[0].split()[1]), r[0])):
        terminalreporter.write_line(f"{status:4}  {name}: {desc} ({secs:.2f} s)")
