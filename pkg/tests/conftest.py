from __future__ import annotations

import pytest

from odcheck import Category, parse

GUARDED_COPY_SRC = """\
low l1 = 0;
low l2 = 0;
high h = 0;

thread {
  if (l1 == 1) {
    l2 := h;
  } else {
    skip;
  }
}

thread {
  l1 := 1;
}

thread {
  h := 1;
}
"""

COPY_HIGH_SRC = """\
low l = 0;
high h = 0;

thread {
  l := h;
}
"""

SPIN_LOOP_SRC = """\
low l = 0;

thread {
  while (1 == 1) {
    skip;
  }
}

thread {
  l := 1;
}
"""


@pytest.fixture(scope="session")
def guarded_copy():
    return parse(GUARDED_COPY_SRC)


@pytest.fixture(scope="session")
def guarded_copy_category(guarded_copy):
    return Category.from_names(guarded_copy)


@pytest.fixture(scope="session")
def copy_high():
    return parse(COPY_HIGH_SRC)


@pytest.fixture(scope="session")
def copy_high_category(copy_high):
    return Category.from_names(copy_high, high_domains={"h": [0, 1]})


# ---------------------------------------------------------------------------
# One pass/fail line per acceptance criterion at the end of the run.
# ---------------------------------------------------------------------------

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed:
        _acceptance_results[name] = "FAIL"
    elif report.when == "setup" and report.skipped:
        _acceptance_results[name] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in sorted(_acceptance_results.items()):
        terminalreporter.write_line(f"  {name}: {outcome}")
