from __future__ import annotations

import math
import random

import numpy as np
import pytest

from _gen import random_expression, random_polynomial
from conftest import SEMISPRAYS, semispray
from sodevar.expr import Point, parse
from sodevar.forms import Lagrangian
from sodevar.geometry import Semispray
from sodevar.numeric import (
    SamplePlan,
    Trajectory,
    euler_lagrange_residual,
    fd_check,
    integrate_geodesic,
    seeded_starts,
)

OSC = Semispray.parse(1, ["x1/2"])


def test_straight_line_is_exact():
    tr = integrate_geodesic(Semispray.zero(2), Point(0.0, (0.3, -0.2), (1.5, 0.25)), 1e-2, 100)
    expected = np.array([0.3, -0.2]) + np.outer(tr.t, [1.5, 0.25])
    assert np.max(np.abs(tr.x - expected)) < 1e-13
    assert np.all(tr.y == np.array([1.5, 0.25]))


def test_harmonic_oscillator_endpoint():
    tr = integrate_geodesic(OSC, Point(0.0, (1.0,), (0.0,)), 1e-3, 1000)
    assert tr.t[-1] == pytest.approx(1.0, abs=1e-12)
    assert abs(tr.x[-1, 0] - math.cos(1.0)) < 1e-8
    assert abs(tr.y[-1, 0] + math.sin(1.0)) < 1e-8


def test_example3_blowup_profile():
    # y2' = (y2)^2 with y2(0) = 1/2 gives y2 = 1/(2 - t)
    tr = integrate_geodesic(semispray("example3"), Point(0.0, (0.0, 0.0), (0.0, 0.5)), 1e-3, 1000)
    assert abs(tr.y[-1, 1] - 1.0) < 1e-6


def test_rk4_order_ratio():
    def err(h):
        steps = round(1.0 / h)
        tr = integrate_geodesic(OSC, Point(0.0, (1.0,), (0.0,)), h, steps)
        return abs(tr.x[-1, 0] - math.cos(1.0))

    ratio = err(0.1) / err(0.05)
    assert 12 <= ratio <= 20


def test_callable_semispray():
    tr = integrate_geodesic(lambda t, x, y: x / 2, Point(0.0, (1.0,), (0.0,)), 1e-3, 1000)
    ref = integrate_geodesic(OSC, Point(0.0, (1.0,), (0.0,)), 1e-3, 1000)
    assert np.array_equal(tr.x, ref.x)


@pytest.mark.parametrize("name", sorted(SEMISPRAYS))
def test_consistency_residual_on_fixtures(name):
    S = semispray(name)
    h = 1e-3
    start = seeded_starts(S.n, 1, seed=3, box=(0.1, 0.5))[0]
    tr = integrate_geodesic(S, start, h, 200)
    assert not tr.truncated
    assert tr.consistency_residual() <= 10 * h ** 2


def test_truncation_flag():
    # x'' = 2 sqrt(1 - x) pushes x past 1, where sqrt leaves its domain
    S = Semispray.parse(1, ["-sqrt(1 - x1)"])
    tr = integrate_geodesic(S, Point(0.0, (0.0,), (1.0,)), 1e-2, 500)
    assert tr.truncated and len(tr) < 501
    assert "step" in tr.message
    assert np.all(np.isfinite(tr.x))


def test_integrator_argument_errors():
    with pytest.raises(ValueError):
        integrate_geodesic(OSC, Point(0.0, (1.0,), (0.0,)), 0.0, 10)
    with pytest.raises(ValueError):
        integrate_geodesic(OSC, Point(0.0, (1.0, 2.0), (0.0, 0.0)), 0.1, 10)


def test_trajectory_requires_increasing_times():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)), np.zeros((2, 1)), 0.1)


def test_el_residual_examples():
    free = Lagrangian.parse(2, "1/2*(y1^2 + y2^2)")
    start = Point(0.0, (0.4, 0.7), (0.3, -0.6))
    tr = integrate_geodesic(Semispray.zero(2), start, 1e-3, 1000)
    assert euler_lagrange_residual(free, Semispray.zero(2), tr) <= 1e-8

    osc = Lagrangian.parse(1, "1/2*y1^2 - 1/2*x1^2")
    tr = integrate_geodesic(OSC, Point(0.0, (1.0,), (0.0,)), 1e-3, 1000)
    assert euler_lagrange_residual(osc, OSC, tr) <= 1e-6

    # mismatched pair: x'' = -2 x1, so d/dt(dL/dy1) - dL/dx1 = -2 x1
    bad = Semispray.parse(2, ["x1", "0"])
    tr = integrate_geodesic(bad, start, 1e-3, 1000)
    r = euler_lagrange_residual(free, bad, tr)
    assert r == pytest.approx(2 * np.max(np.abs(tr.x[1:-1, 0])), rel=1e-4)
    assert r > 0.1


def test_export_format_and_round_trip():
    tr = integrate_geodesic(semispray("poly2"), Point(0.1, (0.2, 0.3), (0.4, 0.5)), 1e-3, 20)
    text = tr.export()
    lines = text.splitlines()
    assert lines[0] == "# method=rk4 h=0.001 samples=21 truncated=false"
    assert lines[1] == "# t\tx1\tx2\ty1\ty2"
    rows = [ln for ln in lines if not ln.startswith("#")]
    assert len(rows) == 21 and all(len(r.split("\t")) == 5 for r in rows)
    back = Trajectory.load(text)
    assert np.array_equal(back.t, tr.t) and np.array_equal(back.x, tr.x) and np.array_equal(back.y, tr.y)


def test_export_records_domain_error():
    tr = integrate_geodesic(Semispray.parse(1, ["-sqrt(1 - x1)"]), Point(0.0, (0.0,), (1.0,)), 1e-2, 500)
    head = tr.export().splitlines()
    assert head[0].endswith("truncated=true") and head[1].startswith("# domain error:")


def test_bit_reproducible():
    S = semispray("trig2")
    a = [integrate_geodesic(S, p, 1e-3, 300).export() for p in seeded_starts(2, 3, seed=9)]
    b = [integrate_geodesic(S, p, 1e-3, 300).export() for p in seeded_starts(2, 3, seed=9)]
    assert a == b
    assert fd_check(parse("sin(x1*y2) + t^3", 2), SamplePlan(seed=4)).as_dict() == \
        fd_check(parse("sin(x1*y2) + t^3", 2), SamplePlan(seed=4)).as_dict()


def test_fd_check_polynomials():
    rng = random.Random(1)
    for _ in range(20):
        rep = fd_check(parse(random_polynomial(rng, 2, terms=4, degree=4), 2), SamplePlan(count=20), n=2)
        assert rep.max_rel_error <= 1e-9
        assert rep.points == 20 and rep.resampled == 0


def test_fd_check_trig_compositions():
    rng = random.Random(2)
    for _ in range(20):
        rep = fd_check(parse(random_expression(rng, 2, 6), 2), SamplePlan(count=20), n=2)
        assert rep.max_rel_error <= 1e-5, rep.worst


def test_fd_check_resamples_outside_domain():
    rep = fd_check(parse("sqrt(x1)", 1), SamplePlan(box=(-1.0, 1.0), count=30), n=1)
    assert rep.resampled > 0 and rep.points == 30
    assert rep.max_rel_error <= 1e-4
    rep = fd_check(parse("1/x1", 1), SamplePlan(box=(-1.0, 1.0), count=30), n=1)
    assert rep.max_rel_error <= 1e-4
    assert set(rep.per_variable) == {"t", "x1", "y1"}


def test_seeded_starts_deterministic():
    a, b = seeded_starts(3, 5, seed=7), seeded_starts(3, 5, seed=7)
    assert [p.as_array().tolist() for p in a] == [p.as_array().tolist() for p in b]
    assert all(0.1 <= v <= 1.1 for p in a for v in p.as_array())
