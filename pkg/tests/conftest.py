"""Shared test plumbing: the acceptance-criteria summary block."""

ACCEPTANCE_LINES: list[tuple[int, str]] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    """Queue one acceptance line; printed in the terminal summary."""
    verdict = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append((number, f"ACCEPTANCE {number}: {verdict} - {detail}"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
