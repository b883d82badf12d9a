CRITERIA: dict[int, str] = {}


def record(n: int, ok: bool, detail: str = "") -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
    CRITERIA[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
