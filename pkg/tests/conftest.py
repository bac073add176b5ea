import cmath
import math

import pytest

from cstet import cs3d

ACCEPTANCE = {}

MINUS_ROOT = (-1 - math.sqrt(5)) / 2
PLUS_ROOT = (-1 + math.sqrt(5)) / 2


def m003_x(root):
    """x on the m003 fixture with X on the first class = root, X on the second = 1."""
    return [cmath.log(root), 0j]


@pytest.fixture(scope="session")
def m003():
    return cs3d.load_fixture("m003")


@pytest.fixture(scope="session")
def m004():
    return cs3d.load_fixture("m004")


@pytest.fixture(scope="session")
def m071():
    return cs3d.load_fixture("m071")


@pytest.fixture(scope="session")
def m071_solved(m071):
    return cs3d.solve_ptolemy(m071.tri, m071.eps, starts=2000, seed=0, marked=m071.marked)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
