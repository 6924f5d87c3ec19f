"""Collects acceptance verdicts and prints one line per criterion."""

ACCEPTANCE_LOG = []


def record_verdict(criterion: int, name: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LOG.append((criterion, name, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, name, ok, detail in sorted(ACCEPTANCE_LOG):
        mark = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"{mark}  criterion {criterion} ({name}): {detail}")
