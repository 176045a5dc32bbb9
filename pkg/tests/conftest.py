import sys
from pathlib import Path

# the oracle module lives next to the tests and is imported by name
sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        status, title, detail = results[n]
        terminalreporter.write_line(f"criterion {n} {status}: {title}" + (f" ({detail})" if detail else ""))
