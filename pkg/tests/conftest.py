from __future__ import annotations

import pytest

_KEY = "_acceptance_lines"


@pytest.fixture
def acceptance(request):
    """Recorder for acceptance criteria: ``acceptance(no, ok, detail)``."""
    lines = request.config.__dict__.setdefault(_KEY, {})

    def record(no: int, ok: bool, detail: str) -> bool:
        lines[no] = f"criterion {no:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get(_KEY)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for no in sorted(lines):
        terminalreporter.write_line(lines[no])
