from __future__ import annotations

import pytest

from sodevar.expr import ZeroTestConfig
from sodevar.forms import SemiBasicOneForm
from sodevar.geometry import Semispray

# name -> (n, G)
SEMISPRAYS = {
    "zero": (2, ["0", "0"]),
    "example1": (2, ["t*y2^2/2", "t"]),
    "example2": (2, ["t*sin(x2)/2", "t/2"]),
    "example3": (2, ["y2", "-y2^2/2"]),
    "poly2": (2, ["x1*y2^2 + t*y1", "x2*y1*y2 - x1^2"]),
    "poly3": (3, ["y1*y2 + x3", "x1*y3^2 - t*y2", "y1^2*x2 + y3"]),
    "trig2": (2, ["sin(x1)*y2^2/4", "exp(t)*y1*y2/3"]),
    "one_dim": (1, ["x1*y1^3 + sin(t)"]),
    "isotropic": (2, ["t*y1", "t*y2"]),
}

# name -> (n, theta0, [theta_i])
THETAS = {
    "generic2": (2, "x1*y2^2 + t*y1", ["y1*x2 + t", "y1*y2^2 + x1"]),
    "free2": (2, "1/2*(y1^2 + y2^2)", ["y1", "y2"]),
    "dt2": (2, "1", ["0", "0"]),
    "generic3": (3, "x1*y3 + y2^2*t", ["y1*y3", "x2*y2^2", "t*y1 + y3^2"]),
    "generic1": (1, "t*y1^3 + x1", ["y1^2*x1"]),
}


def semispray(name: str) -> Semispray:
    n, G = SEMISPRAYS[name]
    return Semispray.parse(n, G)


def theta(name: str) -> SemiBasicOneForm:
    n, t0, th = THETAS[name]
    return SemiBasicOneForm.parse(n, t0, th)


@pytest.fixture
def cfg() -> ZeroTestConfig:
    return ZeroTestConfig()


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
