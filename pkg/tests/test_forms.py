from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from _gen import random_polynomial
from conftest import SEMISPRAYS, semispray, theta
from sodevar import tensorfd
from sodevar.expr import Point, VarId, ZeroTestConfig, diff, evaluate, is_zero, parse, sub
from sodevar.forms import (
    Lagrangian,
    PreconditionError,
    SemiBasicOneForm,
    contraction_oracle,
    contract_S,
    d_h,
    d_J,
    d_phi,
    d_R,
    dtheta_matrix,
    metric_tensor,
    metric_with_regularity,
    oracle_errors,
    oracle_points,
    poincare_cartan,
    rank_dtheta,
    reconstruction_identity,
    wedge_dt,
)
from sodevar.geometry import Semispray, curvature


def all_zero(exprs, n=2):
    return all(is_zero(e, ZeroTestConfig(), n) for e in exprs)


def eq(a, text, n=2):
    return is_zero(sub(a, parse(text, n)), ZeroTestConfig(), n)


FREE = SemiBasicOneForm.parse(2, "1/2*(y1^2 + y2^2)", ["y1", "y2"])


def test_one_form_validation():
    with pytest.raises(ValueError):
        SemiBasicOneForm.parse(2, "1", ["y1"])
    assert SemiBasicOneForm.dt(3).theta0 == parse("1", 3)


def test_d_J_examples():
    S = semispray("poly2")
    assert all_zero(d_J(FREE, S).components())
    assert all_zero(d_J(SemiBasicOneForm.dt(2), S).components())
    w = d_J(SemiBasicOneForm.parse(2, "0", ["y2", "0"]), S)
    # full coefficients: c_time_1 = theta_1 - d theta_0/dy1, c_space_21 = d theta_1/dy2 - d theta_2/dy1
    assert eq(w.c_time[0], "y2") and eq(w.c_time[1], "0")
    assert eq(w.c_space[1][0], "1") and eq(w.c_space[0][1], "-1")


def test_d_J_of_poincare_cartan_vanishes():
    rng = random.Random(11)
    S = semispray("poly3")
    for _ in range(10):
        L = Lagrangian.parse(3, random_polynomial(rng, 3, terms=4, degree=4))
        assert all_zero(d_J(poincare_cartan(L, S), S).components(), 3)


def test_d_h_examples():
    assert all_zero(d_h(FREE, Semispray.zero(2)).components())
    for name in SEMISPRAYS:
        S = semispray(name)
        assert all_zero(d_h(SemiBasicOneForm.dt(S.n), S).components(), S.n)


def test_two_form_antisymmetry():
    w = d_h(theta("generic3"), semispray("poly3"))
    for i in range(3):
        assert eq(w.c_space[i][i], "0", 3)
        for j in range(3):
            assert is_zero(w.c_space[i][j] + w.c_space[j][i], ZeroTestConfig(), 3)


# (theta, semispray) pairs for the oracle comparisons
PAIRS = [
    ("generic2", "poly2"),
    ("generic2", "trig2"),
    ("generic2", "example3"),
    ("free2", "example1"),
    ("generic3", "poly3"),
    ("generic1", "one_dim"),
    ("dt2", "poly2"),
]


@pytest.mark.parametrize("th,sp", PAIRS)
def test_coordinate_formulas_match_oracles(th, sp):
    S, T = semispray(sp), theta(th)
    pts = oracle_points(T, S, ZeroTestConfig(seed=5), count=20)
    assert len(pts) == 20
    errs = oracle_errors(T, S, pts)
    assert errs["d_J"] < 1e-4 and errs["d_h"] < 1e-4 and errs["d_R"] < 1e-4, errs


def test_contraction_oracle_dt_is_zero():
    orc = contraction_oracle(SemiBasicOneForm.dt(2), semispray("poly2"), Point(0.3, (0.4, 0.5), (0.6, 0.7)))
    for key in ("d_J", "d_h"):
        c_time, c_space = orc[key]
        assert np.max(np.abs(c_time)) < 1e-8 and np.max(np.abs(c_space)) < 1e-8


def test_dtheta_matrix_matches_finite_differences():
    S, T = semispray("poly2"), theta("generic2")
    orc = tensorfd.FormOracle(T, S)
    for p in oracle_points(T, S, ZeroTestConfig(seed=2), count=5):
        z = p.as_array()
        num = orc.adapted(orc.dtheta(z), z)
        sym = np.array([[evaluate(e, p) for e in row] for row in dtheta_matrix(T, S)])
        assert np.max(np.abs(num - sym)) < 1e-6


def test_d_J_squared_is_plus_d_J_wedge_dt():
    # d_J(d_J theta) = +(d_J theta) ^ dt with (w ^ dt)(S, X, Y) = w(X, Y)
    S, T = semispray("poly2"), theta("generic2")
    orc = tensorfd.FormOracle(T, S)
    v = wedge_dt(d_J(T, S))
    for p in oracle_points(T, S, ZeroTestConfig(seed=4), count=10):
        z = p.as_array()
        c_time, c_space = tensorfd.three_form_components(orc.adapted(orc.dJdJ_natural(z), z), 2)
        vt = np.array([[evaluate(e, p) for e in r] for r in v.c_time])
        assert np.max(np.abs(c_time - vt)) < 1e-4
        assert np.max(np.abs(c_space)) < 1e-4
        assert np.max(np.abs(c_time + vt)) > 1e-2


def test_d_phi_examples():
    S3 = semispray("example3")
    w = d_phi(FREE, S3)
    assert all_zero(w.c_time)
    assert eq(w.c_space[0][1], "y2") and eq(w.c_space[1][0], "-y2")
    assert all_zero(d_phi(theta("generic2"), semispray("zero")).components())
    # diagonal multiplier and diagonal Phi: space part vanishes
    S = Semispray.parse(2, ["x1/2", "t*x2/2"])
    T = SemiBasicOneForm.parse(2, "y1^2 + 3*y2^2/2", ["2*y1", "3*y2"])
    assert all_zero(d_phi(T, S).c_space[0][1:])


@pytest.mark.parametrize("name", ["zero", "example2"])
def test_d_R_flat_vanishes(name):
    S = semispray(name) if name == "zero" else Semispray.parse(2, ["sin(t)/2", "t/2"])
    assert all_zero(d_R(theta("generic2"), S).components())


def test_d_R_one_dimensional_vanishes():
    assert d_R(theta("generic1"), semispray("one_dim")).components() == []


@pytest.mark.parametrize("sp", ["poly2", "example3", "trig2", "example1"])
def test_d_R_equals_minus_d_phi_wedge_dt_for_n2(sp):
    # theta with theta_i = d theta_0/dy^i (the dt slot of d_J theta vanishes)
    S = semispray(sp)
    rng = random.Random(sp)
    for _ in range(3):
        T = poincare_cartan(Lagrangian.parse(2, random_polynomial(rng, 2, terms=4, degree=4)), S)
        lhs = d_R(T, S)
        rhs = wedge_dt(d_phi(T, S))
        assert all(is_zero(a + b, ZeroTestConfig(), 2) for a, b in zip(lhs.components(), rhs.components()))


def test_d_R_extra_time_term_for_generic_theta():
    # d_R theta + d_Phi theta ^ dt = -R^l_12 (theta_l - d theta_0/dy^l) dt^dx^1^dx^2
    S, T = semispray("poly2"), theta("generic2")
    R3 = curvature(S).R3
    w = [T.theta[l] - diff(T.theta0, VarId.y(l + 1)) for l in range(2)]
    extra = -(R3[0][0][1] * w[0] + R3[1][0][1] * w[1])
    total = d_R(T, S).c_time[0][1] + wedge_dt(d_phi(T, S)).c_time[0][1]
    assert not is_zero(extra, ZeroTestConfig(), 2)
    assert is_zero(total - extra, ZeroTestConfig(), 2)


def test_three_form_antisymmetry():
    w = d_R(theta("generic3"), semispray("poly3"))
    cfg = ZeroTestConfig()
    for i, j, k in itertools.product(range(3), repeat=3):
        assert is_zero(w.c_space[i][j][k] + w.c_space[j][i][k], cfg, 3)
        assert is_zero(w.c_space[i][j][k] + w.c_space[i][k][j], cfg, 3)


def test_poincare_cartan_and_contract():
    L = Lagrangian.parse(2, "1/2*(y1^2 + y2^2)")
    th = poincare_cartan(L)
    assert th.theta0 == L.L and [str(e) for e in th.theta] == ["y1", "y2"]
    assert contract_S(SemiBasicOneForm.dt(2)) == parse("1", 2)
    assert contract_S(SemiBasicOneForm.parse(2, "x1*y2", ["0", "0"])) == parse("x1*y2", 2)


def test_metric_tensor():
    g = metric_tensor(Lagrangian.parse(2, "1/2*(y1^2 + y2^2)"), 2)
    assert [[str(e) for e in r] for r in g] == [["1", "0"], ["0", "1"]]
    assert metric_with_regularity(Lagrangian.parse(2, "1/2*(y1^2 + y2^2)"), 2).regular
    assert not metric_with_regularity(Lagrangian.parse(2, "y1"), 2).regular
    m = metric_with_regularity(Lagrangian.parse(2, "1/2*y1^2 + y1*y2"), 2)
    assert m.regular and [[str(e) for e in r] for r in m.g] == [["1", "1"], ["1", "0"]]


def test_metric_symmetric_on_random_lagrangians():
    rng = random.Random(5)
    for _ in range(10):
        L = Lagrangian.parse(3, random_polynomial(rng, 3, terms=5, degree=4) + " + sin(x1*y2)*y3^2")
        g = metric_tensor(L, 3)
        for i in range(3):
            for j in range(3):
                assert is_zero(g[i][j] - g[j][i], ZeroTestConfig(), 3)


def test_rank_dtheta_examples():
    S = Semispray.zero(2)
    assert rank_dtheta(FREE, S) == 4
    assert rank_dtheta(SemiBasicOneForm.dt(2), S) == 0
    L = Lagrangian.parse(1, "y1")
    assert rank_dtheta(poincare_cartan(L), Semispray.zero(1)) == 0


def test_reconstruction_identity():
    S = semispray("poly2")
    L = Lagrangian.parse(2, "x1*y2^3 + t*y1^2")
    assert reconstruction_identity(poincare_cartan(L, S), S)
    assert reconstruction_identity(SemiBasicOneForm.dt(2), S)
    with pytest.raises(PreconditionError):
        reconstruction_identity(theta("generic2"), S)


def test_as_dict_is_plain():
    d = d_R(theta("generic3"), semispray("poly3")).as_dict()
    assert set(d) == {"dt^dx^dx", "dx^dx^dx"}
    assert all(isinstance(v, str) for v in d["dx^dx^dx"].values())
