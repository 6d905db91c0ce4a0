"""The inverse problem pipeline: P = (d_J, d_h), the obstruction d_R theta = 0,
multiplier conditions, Lagrangian verification and a variationality verdict."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import (
    Expr,
    InconclusiveError,
    VarId,
    ZeroTestConfig,
    add,
    compile_terms_vector,
    diff,
    div,
    is_zero,
    mul,
    sample_points,
    sub,
    to_text,
    y,
)
from .forms import (
    Lagrangian,
    SemiBasicOneForm,
    SemiBasicThreeForm,
    SemiBasicTwoForm,
    contract_S,
    d_h,
    d_J,
    d_R,
    metric_tensor,
    metric_with_regularity,
    poincare_cartan,
    rank_dtheta,
)
from .geometry import Semispray, classify, curvature


class Verdict(str, enum.Enum):
    LAGRANGIAN_CONFIRMED = "LagrangianConfirmed"
    FORMALLY_INTEGRABLE_CLASS = "FormallyIntegrableClass"
    OBSTRUCTION_FAILS = "ObstructionFails"
    INCONCLUSIVE = "Inconclusive"


class SingularMetricError(ValueError):
    """The metric g_ij = d^2 L / dy^i dy^j is degenerate somewhere on the box."""


class DimensionTooLargeError(ValueError):
    """Symbolic inversion of the metric is only done for n <= 3."""


@dataclass
class HelmholtzReport:
    dJ_zero: bool
    dh_zero: bool
    dR_zero: bool
    rank_dtheta: int
    regular: bool
    verdict: Verdict
    details: list = field(default_factory=list)
    iS_dtheta_zero: bool | None = None
    lagrangian: str | None = None

    def __post_init__(self):
        if self.verdict is Verdict.LAGRANGIAN_CONFIRMED:
            assert self.dJ_zero and self.dh_zero and self.dR_zero and self.regular

    def as_dict(self) -> dict:
        out = {
            "dJ_zero": self.dJ_zero,
            "dh_zero": self.dh_zero,
            "dR_zero": self.dR_zero,
            "rank_dtheta": self.rank_dtheta,
            "regular": self.regular,
            "verdict": self.verdict.value,
            "details": list(self.details),
        }
        if self.iS_dtheta_zero is not None:
            out["iS_dtheta_zero"] = self.iS_dtheta_zero
        if self.lagrangian is not None:
            out["lagrangian"] = self.lagrangian
        return out


@dataclass(frozen=True)
class MultiplierMatrix:
    a: tuple

    @classmethod
    def of(cls, theta: SemiBasicOneForm) -> "MultiplierMatrix":
        n = theta.n
        return cls(tuple(tuple(diff(theta.theta[i], VarId.y(j + 1)) for j in range(n)) for i in range(n)))

    @classmethod
    def identity(cls, n: int) -> "MultiplierMatrix":
        return cls(tuple(tuple(mul(1 if i == j else 0, 1) for j in range(n)) for i in range(n)))


def _all_zero(exprs, cfg: ZeroTestConfig, n: int) -> bool:
    return all(is_zero(e, cfg, n) for e in exprs)


def apply_P(theta: SemiBasicOneForm, S: Semispray) -> tuple[SemiBasicTwoForm, SemiBasicTwoForm]:
    return d_J(theta, S), d_h(theta, S)


def is_first_order_solution(theta: SemiBasicOneForm, S: Semispray, cfg: ZeroTestConfig | None = None) -> bool:
    cfg = cfg or ZeroTestConfig()
    dj, dh = apply_P(theta, S)
    return _all_zero(dj.components() + dh.components(), cfg, S.n)


def obstruction(theta: SemiBasicOneForm, S: Semispray, cfg: ZeroTestConfig | None = None) -> tuple[SemiBasicThreeForm, bool]:
    cfg = cfg or ZeroTestConfig()
    w = d_R(theta, S)
    return w, _all_zero(w.components(), cfg, S.n)


def classical_conditions(a: MultiplierMatrix, S: Semispray, cfg: ZeroTestConfig | None = None) -> dict:
    """Symmetry of a, the Bianchi-type identity and the multiplier condition with Phi."""
    cfg = cfg or ZeroTestConfig()
    n = S.n
    cv = curvature(S)
    R3, Phi = cv.R3, cv.Phi
    A = a.a
    symmetric = _all_zero([sub(A[i][j], A[j][i]) for i in range(n) for j in range(i + 1, n)], cfg, n)

    def aR(i, j, k):
        return add(*(mul(A[i][l], R3[l][j][k]) for l in range(n)))

    bianchi_exprs = [
        add(aR(i, j, k), aR(j, k, i), aR(k, i, j))
        for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)
    ]
    phi_exprs = [
        sub(add(*(mul(A[j][k], Phi[k][i]) for k in range(n))), add(*(mul(A[i][k], Phi[k][j]) for k in range(n))))
        for i in range(n) for j in range(i + 1, n)
    ]
    result = {
        "symmetric": symmetric,
        "bianchi": _all_zero(bianchi_exprs, cfg, n),
        "multiplier_phi": _all_zero(phi_exprs, cfg, n),
    }
    result["all_pass"] = all(result.values())
    return result


# ---------------------------------------------------------------------------
# Lagrangian -> semispray


def _euler_lagrange_rhs(L: Expr, n: int) -> list:
    """E_j = d^2L/dt dy^j + y^k d^2L/dx^k dy^j - dL/dx^j, so that g_jk y'^k = -E_j."""
    out = []
    for j in range(1, n + 1):
        Ly = diff(L, VarId.y(j))
        terms = [diff(Ly, VarId.t()), mul(-1, diff(L, VarId.x(j)))]
        terms += [mul(y(k), diff(Ly, VarId.x(k))) for k in range(1, n + 1)]
        out.append(add(*terms))
    return out


def _det(m: list) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return sub(mul(m[0][0], m[1][1]), mul(m[0][1], m[1][0]))
    return add(*(mul((-1) ** c, m[0][c], _det([row[:c] + row[c + 1 :] for row in m[1:]])) for c in range(n)))


def _adjugate(m: list) -> list:
    n = len(m)
    if n == 1:
        return [[mul(1, 1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(m) if k != i]
            adj[j][i] = mul((-1) ** (i + j), _det(minor))
    return adj


def semispray_from_lagrangian(L: Lagrangian, n: int, cfg: ZeroTestConfig | None = None) -> Semispray:
    """2G^i = g^{ij} E_j via adjugate and determinant (n <= 3)."""
    cfg = cfg or ZeroTestConfig()
    if n > 3:
        raise DimensionTooLargeError(
            f"symbolic metric inversion is limited to n <= 3 (got n={n}); use numeric_semispray_from_lagrangian"
        )
    g = [list(row) for row in metric_tensor(L, n)]
    det = _det(g)
    try:
        nonzero = not is_zero(det, cfg, n)
        regular = nonzero and metric_with_regularity(L, n, cfg).regular
    except InconclusiveError as exc:
        raise SingularMetricError(f"metric could not be evaluated: {exc}") from None
    if not regular:
        raise SingularMetricError(f"metric of L = {to_text(L.L)} is singular (det g = {to_text(det)})")
    adj = _adjugate(g)
    E = _euler_lagrange_rhs(L.L, n)
    G = []
    for i in range(n):
        num = add(*(mul(adj[i][j], E[j]) for j in range(n)))
        G.append(div(num, mul(2, det)))
    return Semispray(n, tuple(G))


def numeric_semispray_from_lagrangian(L: Lagrangian, n: int) -> Callable:
    """G(t, x, y) as a numpy vector, solving g (2G) = E pointwise (any n)."""
    g = metric_tensor(L, n)
    gf = compile_terms_vector([e for row in g for e in row])
    Ef = compile_terms_vector(_euler_lagrange_rhs(L.L, n))

    def G(t, x, y_):
        M = gf(t, x, y_).reshape(n, n)
        return 0.5 * np.linalg.solve(M, Ef(t, x, y_))

    return G


# ---------------------------------------------------------------------------
# verification


def verify_lagrangian(L: Lagrangian, S: Semispray, cfg: ZeroTestConfig | None = None) -> HelmholtzReport:
    cfg = cfg or ZeroTestConfig()
    n = S.n
    theta = poincare_cartan(L, S)
    dj, dh = apply_P(theta, S)
    dJ_zero = _all_zero(dj.components(), cfg, n)
    dh_zero = _all_zero(dh.components(), cfg, n)
    # i_S d theta_L has components d theta(S, delta_i) and d theta(S, d/dy^i)
    iS = list(dh.c_time) + list(dj.c_time)
    iS_zero = _all_zero(iS, cfg, n)
    _, dR_zero = obstruction(theta, S, cfg)
    details = []
    try:
        rank = rank_dtheta(theta, S, cfg)
    except InconclusiveError as exc:
        rank = 0
        details.append(f"rank of d theta could not be evaluated: {exc}")
    regular = rank == 2 * n
    details.append(f"rank(d theta_L) = {rank} (regular needs {2 * n})")
    if not dJ_zero:
        details.append("d_J theta_L does not vanish")
    if not dh_zero:
        details.append("d_h theta_L does not vanish: S is not the Euler-Lagrange semispray of L")
    if not iS_zero:
        details.append("i_S d theta_L does not vanish")
    if not dR_zero:
        details.append("d_R theta_L does not vanish")
    if not regular:
        verdict = Verdict.INCONCLUSIVE
        details.append("L is not regular; no conclusion about S")
    elif dJ_zero and dh_zero and iS_zero and dR_zero:
        verdict = Verdict.LAGRANGIAN_CONFIRMED
    else:
        verdict = Verdict.OBSTRUCTION_FAILS
    return HelmholtzReport(dJ_zero, dh_zero, dR_zero, rank, regular, verdict, details, iS_zero, to_text(L.L))


def variationality_verdict(S: Semispray, theta: SemiBasicOneForm | None = None,
                           cfg: ZeroTestConfig | None = None) -> HelmholtzReport:
    cfg = cfg or ZeroTestConfig()
    n = S.n
    if theta is None:
        rep = classify(S, cfg)
        details = list(rep.notes)
        if rep.is_flat or rep.is_isotropic or n == 1:
            kind = "flat" if rep.is_flat else ("n = 1" if n == 1 else "isotropic")
            details.append(f"{kind} semispray: the obstruction d_R theta = 0 holds for every first-order "
                           "solution and the symbol is involutive, so P is formally integrable")
            return HelmholtzReport(False, False, True, 0, False, Verdict.FORMALLY_INTEGRABLE_CLASS, details)
        details.append("not flat, isotropic or one-dimensional: the obstruction must be checked per candidate theta")
        return HelmholtzReport(False, False, False, 0, False, Verdict.INCONCLUSIVE, details)

    dj, dh = apply_P(theta, S)
    dJ_zero = _all_zero(dj.components(), cfg, n)
    dh_zero = _all_zero(dh.components(), cfg, n)
    _, dR_zero = obstruction(theta, S, cfg)
    details = []
    try:
        rank = rank_dtheta(theta, S, cfg)
    except InconclusiveError as exc:
        rank = 0
        details.append(f"rank of d theta could not be evaluated: {exc}")
    regular = rank == 2 * n
    details.append(f"rank(d theta) = {rank} (regular needs {2 * n})")
    if n == 1:
        details.append("n = 1: d_R theta vanishes identically (no semi-basic 3-forms)")
    if not (dJ_zero and dh_zero):
        details.append("theta is not a solution of P = (d_J, d_h)")
        return HelmholtzReport(dJ_zero, dh_zero, dR_zero, rank, regular, Verdict.OBSTRUCTION_FAILS, details)
    if not dR_zero:
        details.append("obstruction d_R theta = 0 fails")
        return HelmholtzReport(dJ_zero, dh_zero, dR_zero, rank, regular, Verdict.OBSTRUCTION_FAILS, details)
    if not regular:
        details.append("theta solves P but d theta is degenerate; no Lagrangian can be read off")
        return HelmholtzReport(dJ_zero, dh_zero, dR_zero, rank, regular, Verdict.INCONCLUSIVE, details)
    L = Lagrangian(contract_S(theta))
    confirm = verify_lagrangian(L, S, cfg)
    details.append(f"reconstructed L = i_S theta = {to_text(L.L)}")
    details += [f"verify: {d}" for d in confirm.details]
    return HelmholtzReport(dJ_zero, dh_zero, dR_zero, rank, regular, confirm.verdict, details,
                           confirm.iS_dtheta_zero, to_text(L.L))


def sample_ok(exprs, cfg: ZeroTestConfig, n: int) -> bool:
    try:
        sample_points(exprs, cfg, n)
        return True
    except InconclusiveError:
        return False
