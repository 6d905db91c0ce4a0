from __future__ import annotations

import re

import numpy as np
import pytest

from conftest import SEMISPRAYS, semispray
from sodevar import tensorfd
from sodevar.expr import Point, VarId, ZeroTestConfig, diff, evaluate, is_zero, parse, sample_points, sub
from sodevar.geometry import (
    Semispray,
    classify,
    connection,
    curvature,
    delta_derivative,
    fn_bracket_oracle,
    jacobi,
    s_derivative,
    structure_identities,
)


def zero(e, n=2):
    return is_zero(e, ZeroTestConfig(), n)


def eq(a, text, n=2):
    return zero(sub(a, parse(text, n)), n)


def test_semispray_validation():
    with pytest.raises(ValueError):
        Semispray.parse(2, ["y1"])
    with pytest.raises(ValueError):
        Semispray(0, ())
    with pytest.raises(ValueError):
        Semispray(1, (parse("y2", 2),))


def test_connection_example3():
    c = connection(semispray("example3"))
    assert [[str(e) for e in r] for r in c.N_spatial] == [["0", "1"], ["0", "-y2"]]
    assert eq(c.N_time[0], "y2") and eq(c.N_time[1], "0")


def test_connection_example2_and_zero():
    S = Semispray.parse(2, ["t*x2^2/2", "sin(t)/2"])
    c = connection(S)
    assert all(zero(e) for row in c.N_spatial for e in row)
    assert all(zero(sub(c.N_time[i], 2 * S.G[i])) for i in range(2))
    c0 = connection(Semispray.zero(3))
    assert all(zero(e, 3) for row in c0.N_spatial for e in row) and all(zero(e, 3) for e in c0.N_time)


def test_connection_definitions_on_fixtures():
    for name in SEMISPRAYS:
        S = semispray(name)
        n = S.n
        c = connection(S)
        for i in range(n):
            trace = sum((c.N_spatial[i][j] * parse(f"y{j + 1}", n) for j in range(n)), parse("0", n))
            assert zero(sub(c.N_time[i], sub(2 * S.G[i], trace)), n)


def test_s_derivative():
    S = semispray("poly2")
    assert eq(s_derivative(S, parse("t", 2)), "1")
    assert eq(s_derivative(S, parse("x1", 2)), "y1")
    assert eq(s_derivative(S, parse("y2", 2)), "-2*(x2*y1*y2 - x1^2)")


def test_example1_S_of_N12():
    # f = t*y2^2, G = (f/2, g): S(N^1_2) = 1/2 f_ty - g f_yy and R^1_2 = -S(N^1_2)
    S = semispray("example1")
    N12 = connection(S).N_spatial[0][1]
    assert eq(s_derivative(S, N12), "y2 - 2*t^2")
    assert zero(sub(jacobi(S)[0][1], -s_derivative(S, N12)))


def test_delta_derivative():
    S = semispray("example3")
    assert eq(delta_derivative(S, parse("y2", 2), 2), "y2")
    assert eq(delta_derivative(S, parse("y2", 2), 1), "0")
    for j in (1, 2):
        for i in (1, 2):
            assert zero(sub(delta_derivative(S, parse(f"y{j}", 2), i), -connection(S).N_spatial[j - 1][i - 1]))
    S0 = Semispray.zero(2)
    e = parse("x1^2*y2 + t*x2", 2)
    assert zero(sub(delta_derivative(S0, e, 1), parse("2*x1*y2", 2)))
    with pytest.raises(IndexError):
        delta_derivative(S, e, 3)
    with pytest.raises(IndexError):
        delta_derivative(S, e, 0)


def test_jacobi_worked_examples():
    Phi = jacobi(semispray("example3"))
    assert [[str(e) for e in r] for r in Phi] == [["0", "y2"], ["0", "0"]]
    Phi2 = jacobi(Semispray.parse(2, ["t*sin(x2)/2", "t/2"]))
    assert eq(Phi2[0][1], "t*cos(x2)") and all(zero(Phi2[i][j]) for i, j in [(0, 0), (1, 0), (1, 1)])


def test_jacobi_example1_with_g_zero():
    S = Semispray.parse(2, ["t*y2^2/2", "0"])
    assert eq(jacobi(S)[0][1], "-y2")


def test_curvature_basic_cases():
    cv = curvature(Semispray.zero(2))
    assert all(zero(e) for m in cv.R3 for r in m for e in r)
    one = curvature(semispray("one_dim"))
    assert zero(one.R3[0][0][0], 1)
    assert not zero(one.Phi[0][0], 1)
    ex3 = curvature(semispray("example3"))
    assert all(zero(e) for m in ex3.R3 for r in m for e in r)


@pytest.mark.parametrize("name", sorted(SEMISPRAYS))
def test_curvature_antisymmetric(name):
    S = semispray(name)
    n = S.n
    R3 = curvature(S).R3
    for i in range(n):
        for j in range(n):
            for k in range(n):
                assert zero(R3[i][j][k] + R3[i][k][j], n)


@pytest.mark.parametrize("name", sorted(SEMISPRAYS))
def test_curvature_matches_bracket_oracle(name):
    S = semispray(name)
    n = S.n
    cv = curvature(S)
    exprs = list(S.G) + [e for r in cv.Phi for e in r]
    for p in sample_points(exprs, ZeroTestConfig(sample_count=20, seed=3), n).points:
        R3n, Phin = tensorfd.curvature_from_bracket(S, p)
        R3s = np.array([[[evaluate(e, p) for e in r] for r in m] for m in cv.R3])
        Phis = np.array([[evaluate(e, p) for e in r] for r in cv.Phi])
        assert np.max(np.abs(R3n - R3s)) < 1e-4
        assert np.max(np.abs(Phin - Phis)) < 1e-4


def test_bracket_oracle_zero_semispray():
    rep = fn_bracket_oracle(Semispray.zero(2), Point(0.2, (0.3, 0.4), (0.5, 0.6)))
    for key, arr in rep.items():
        assert np.max(np.abs(arr)) < 1e-8, key


@pytest.mark.parametrize("name", ["poly2", "poly3", "trig2", "example3"])
def test_J_Phi_identity(name):
    S = semispray(name)
    for p in sample_points(list(S.G), ZeroTestConfig(sample_count=5, seed=7), S.n).points:
        rep = fn_bracket_oracle(S, p)
        assert np.max(np.abs(rep["J_Phi"] - rep["three_R_plus_Phi_dt"])) < 1e-4


@pytest.mark.parametrize("name", sorted(SEMISPRAYS))
def test_structure_identities(name):
    results = structure_identities(semispray(name), ZeroTestConfig(), points=3)
    names = {r.name for r in results}
    for required in ("J^2 = 0", "h^2 = h", "Gamma^2 = Id", "F^3 + F = 0", "[J,h] = 0", "Phi = i_S R"):
        assert required in names
    failed = [r.as_dict() for r in results if not r.passed]
    assert not failed


def test_classify_flat_and_isotropic():
    rep = classify(Semispray.zero(2))
    assert rep.is_flat and rep.is_isotropic and zero(rep.lam)
    rep = classify(semispray("isotropic"))
    assert not rep.is_flat and rep.is_isotropic
    # G^i = c(t) y^i gives lambda = -(c^2 + c')
    assert eq(rep.lam, "-(t^2 + 1)")
    assert all(zero(a) for a in rep.alpha[1:])


def test_classify_phi_of_x():
    # G^i = phi(t) x^i / 2 gives Phi = phi(t) Id
    rep = classify(Semispray.parse(3, ["t^2*x1/2", "t^2*x2/2", "t^2*x3/2"]))
    assert rep.is_isotropic and eq(rep.lam, "t^2", 3)


def test_classify_one_dimensional_is_isotropic():
    for G in ("x1*y1^3 + sin(t)", "y1^2*exp(x1)", "t"):
        rep = classify(Semispray.parse(1, [G]))
        assert rep.is_isotropic


def test_classify_example3_not_isotropic_with_note():
    rep = classify(semispray("example3"))
    assert not rep.is_flat and not rep.is_isotropic
    assert any("nilpotent" in s for s in rep.notes)


def test_classify_example2_flat_case():
    rep = classify(Semispray.parse(2, ["sin(t)/2", "t/2"]))
    assert rep.is_flat


def test_naturality_under_relabeling():
    S = semispray("poly2")
    swapped_text = ["x2*y1*y2 - x1^2", "x1*y2^2 + t*y1"]
    swap = {"x1": "x2", "x2": "x1", "y1": "y2", "y2": "y1"}

    T = Semispray.parse(2, [re.sub(r"[xy][12]", lambda m: swap[m.group()], g) for g in swapped_text])
    P, Q = jacobi(S), jacobi(T)
    p = Point(0.4, (0.3, 0.8), (0.6, 0.2))
    q = Point(0.4, (0.8, 0.3), (0.2, 0.6))
    for i in range(2):
        for j in range(2):
            assert evaluate(P[i][j], p) == pytest.approx(evaluate(Q[1 - i][1 - j], q), abs=1e-12)


def test_jacobi_matches_defining_formula():
    # R^i_j = 2 dG^i/dx^j - N^i_k N^k_j - S(N^i_j), assembled here from diff directly
    S = semispray("poly3")
    n = 3
    N = [[diff(S.G[i], VarId.y(j + 1)) for j in range(n)] for i in range(n)]
    Phi = jacobi(S)
    for i in range(n):
        for j in range(n):
            expected = 2 * diff(S.G[i], VarId.x(j + 1)) - sum(
                (N[i][k] * N[k][j] for k in range(n)), parse("0", n)
            ) - s_derivative(S, N[i][j])
            assert zero(Phi[i][j] - expected, n)
