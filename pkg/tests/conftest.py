import pytest

from mimcav import CavityGeometry

ACCEPTANCE_LINES = []


@pytest.fixture
def pair():
    return CavityGeometry(2, 0.5)


@pytest.fixture
def report_line():
    def record(number, passed, text):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
