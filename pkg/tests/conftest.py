import pytest

_VERDICTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict(capsys):
    """Record and print one pass/fail line for an acceptance criterion."""

    def emit(number: int, passed: bool, detail: str) -> bool:
        _VERDICTS[number] = (passed, detail)
        with capsys.disabled():
            print(f"\ncriterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        passed, detail = _VERDICTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
