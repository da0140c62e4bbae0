import sys


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in list(sys.modules.items())
                if name.endswith("test_acceptance") and hasattr(m, "ACCEPTANCE_VERDICTS")), None)
    if mod is None or not mod.ACCEPTANCE_VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.ACCEPTANCE_VERDICTS):
        terminalreporter.write_line(mod.format_verdict(k, *mod.ACCEPTANCE_VERDICTS[k]))
