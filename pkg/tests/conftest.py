_LINES = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _LINES.extend(v for k, v in report.user_properties if k == "criterion")


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
    passed = sum(line.startswith("[PASS]") for line in _LINES)
    terminalreporter.write_line(f"{passed}/{len(_LINES)} criteria passed")
