import re

import numpy as np
import pytest

from meanfix.examples import example1, example2

_ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def order(row):
        num, tail = re.match(r"(\d+)(.*)", str(row[0])).groups()
        return int(num), tail

    for number, title, passed, detail in sorted(_ACCEPTANCE, key=order):
        line = f"[{'PASS' if passed else 'FAIL'}] {number:>3} {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def ex1():
    return example1(16)


@pytest.fixture
def ex2():
    return example2(16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
