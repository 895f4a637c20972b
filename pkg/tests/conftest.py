import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

import acceptance_report  # noqa: E402

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    rows = acceptance_report.lines()
    if rows:
        terminalreporter.section("acceptance criteria")
        for row in rows:
            terminalreporter.write_line(row)
