def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    # order by criterion number
    for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
