import acceptance_log


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance_log.LINES):
        terminalreporter.write_line(line[1])
