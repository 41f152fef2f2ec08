import datetime as dt

import numpy as np
import pytest


def business_days(start, n):
    days, day = [], start
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days


def write_csv(path, dates, tickers, rows):
    lines = ["date," + ",".join(tickers)]
    for day, row in zip(dates, rows):
        lines.append(day.isoformat() + "," + ",".join(repr(float(v)) for v in np.atleast_1d(row)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def csv_writer(tmp_path):
    def _write(name, dates, tickers, rows):
        return write_csv(tmp_path / name, dates, tickers, rows)
    return _write


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
