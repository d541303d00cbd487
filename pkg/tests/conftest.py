import pytest

_LINES: dict[int, str] = {}


class Ledger:
    def record(self, number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _LINES[number] = line
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return Ledger()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
