import pytest

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_report(capsys):
    def report(num: int, passed: bool, detail: str):
        ACCEPTANCE_RESULTS[num] = (passed, detail)
        with capsys.disabled():
            print(f"\nACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} | {detail}")
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"ACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} | {detail}")
