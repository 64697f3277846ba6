import pytest

from canonical_heights import canheight as ch

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def e3():
    return ch.load_system("e3")


@pytest.fixture(scope="session")
def wsys():
    return ch.load_system("wehler")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
