import _acceptance_log


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance_log.RESULTS):
        entries = _acceptance_log.RESULTS[n]
        ok = all(e[0] for e in entries)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}")
        for _, line in entries:
            terminalreporter.write_line(f"    {line}")
