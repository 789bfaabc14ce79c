import re

import pytest


@pytest.fixture
def acceptance(record_property):
    """Record one verdict line for the acceptance summary; the line is also
    printed so ``pytest -s tests/test_acceptance.py`` shows it inline."""

    def emit(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        print(line)
        record_property("acceptance", line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call":
                continue
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        order = lambda s: (int(re.search(r"criterion (\d+)", s).group(1)), s)
        for line in sorted(lines, key=order):
            terminalreporter.write_line(line)
