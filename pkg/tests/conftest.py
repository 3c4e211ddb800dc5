import re


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in report.nodeid:
                continue
            match = re.search(r"test_c(\d+)_(\w+)", report.nodeid)
            if not match:
                continue
            number = int(match.group(1))
            label = match.group(2).replace("_", " ")
            status = "PASS" if outcome == "passed" else "FAIL"
            # A criterion's parametrized cases collapse into one line; any
            # failure wins over earlier passes.
            if number not in lines or status == "FAIL":
                lines[number] = (status, label)
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(lines):
        status, label = lines[number]
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {label}")
