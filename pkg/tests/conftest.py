"""Shared test plumbing: the acceptance scorecard summary."""

SCORECARD = []


def pytest_terminal_summary(terminalreporter):
    if SCORECARD:
        terminalreporter.section("acceptance scorecard")
        for line in sorted(SCORECARD):
            terminalreporter.write_line(line)
