import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted(mod.RESULTS, key=lambda c: (int(c[1:].split("-")[0]), c))
    for cid in order:
        ok, detail = mod.RESULTS[cid]
        tag = "info" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{cid:<9} {tag}  {detail}")
