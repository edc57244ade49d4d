import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

# one (criterion, passed, detail) entry per acceptance criterion, printed at the end
ACCEPTANCE = []


@pytest.fixture
def verdict():
    def record(num, ok, detail):
        ACCEPTANCE.append((num, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
        assert ok, f"criterion {num}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}")
