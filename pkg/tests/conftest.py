"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
CRITERIA = range(1, 10)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in CRITERIA:
        if n in ACCEPTANCE:
            ok, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n}: FAIL  (not run or crashed)")
