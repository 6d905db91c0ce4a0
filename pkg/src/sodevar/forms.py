"""Semi-basic forms in the adapted coframe {dt, delta x^i}.

Components are stored as full antisymmetric arrays holding the values of
the form on adapted frame vectors:

    SemiBasicTwoForm:   c_time[i]       = w(S, delta_i)
                        c_space[j][i]   = w(delta_j, delta_i)
    SemiBasicThreeForm: c_time[i][j]    = w(S, delta_i, delta_j)
                        c_space[i][j][k] = w(delta_i, delta_j, delta_k)

These are the coefficients on the ordered basis (dt^delta x^i, delta x^j^delta x^i
with j < i, ...), so no 1/2 or 1/3! factors remain.  Indices run from 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import (
    ZERO,
    DomainError,
    Expr,
    InconclusiveError,
    Point,
    VarId,
    ZeroTestConfig,
    add,
    as_expr,
    diff,
    evaluate,
    is_zero,
    mul,
    parse,
    sample_points,
    simplify,
    sub,
    to_text,
)
from .geometry import Semispray, connection, curvature, delta_derivative, jacobi, s_derivative


@dataclass(frozen=True)
class SemiBasicOneForm:
    theta0: Expr
    theta: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta0", simplify(as_expr(self.theta0)))
        object.__setattr__(self, "theta", tuple(simplify(as_expr(e)) for e in self.theta))

    @property
    def n(self) -> int:
        return len(self.theta)

    @classmethod
    def parse(cls, n: int, theta0: str, theta: Sequence[str]) -> "SemiBasicOneForm":
        if len(theta) != n:
            raise ValueError(f"expected {n} components theta_i, got {len(theta)}")
        return cls(parse(theta0, n), tuple(parse(s, n) for s in theta))

    @classmethod
    def dt(cls, n: int) -> "SemiBasicOneForm":
        return cls(as_expr(1), (ZERO,) * n)

    def components(self) -> list:
        return [self.theta0, *self.theta]

    def as_dict(self) -> dict:
        return {"theta0": to_text(self.theta0), "theta": [to_text(e) for e in self.theta]}


@dataclass(frozen=True)
class SemiBasicTwoForm:
    c_time: tuple
    c_space: tuple

    @property
    def n(self) -> int:
        return len(self.c_time)

    def components(self) -> list:
        """Independent components: c_time, then c_space[j][i] for j < i."""
        n = self.n
        return list(self.c_time) + [self.c_space[j][i] for j in range(n) for i in range(j + 1, n)]

    def as_dict(self) -> dict:
        n = self.n
        return {
            "dt^dx": [to_text(e) for e in self.c_time],
            "dx^dx": {f"{j + 1},{i + 1}": to_text(self.c_space[j][i]) for j in range(n) for i in range(j + 1, n)},
        }


@dataclass(frozen=True)
class SemiBasicThreeForm:
    c_time: tuple
    c_space: tuple

    @property
    def n(self) -> int:
        return len(self.c_time)

    def components(self) -> list:
        n = self.n
        out = [self.c_time[i][j] for i, j in itertools.combinations(range(n), 2)]
        out += [self.c_space[i][j][k] for i, j, k in itertools.combinations(range(n), 3)]
        return out

    def as_dict(self) -> dict:
        n = self.n
        return {
            "dt^dx^dx": {f"{i + 1},{j + 1}": to_text(self.c_time[i][j]) for i, j in itertools.combinations(range(n), 2)},
            "dx^dx^dx": {
                f"{i + 1},{j + 1},{k + 1}": to_text(self.c_space[i][j][k])
                for i, j, k in itertools.combinations(range(n), 3)
            },
        }


@dataclass(frozen=True)
class Lagrangian:
    L: Expr

    def __post_init__(self):
        object.__setattr__(self, "L", simplify(as_expr(self.L)))

    @classmethod
    def parse(cls, n: int, text: str) -> "Lagrangian":
        return cls(parse(text, n))


def _antisym2(upper) -> tuple:
    """Full matrix from a function (j, i) -> value, antisymmetrized."""
    n = len(upper)
    m = [[ZERO] * n for _ in range(n)]
    for j in range(n):
        for i in range(j + 1, n):
            m[j][i] = upper[j][i]
            m[i][j] = mul(-1, upper[j][i])
    return tuple(tuple(r) for r in m)


def _check(theta: SemiBasicOneForm, S: Semispray) -> None:
    if theta.n != S.n:
        raise ValueError(f"form has n={theta.n} but the semispray has n={S.n}")


def multiplier(theta: SemiBasicOneForm) -> tuple:
    """a_ij = d theta_i / d y^j."""
    n = theta.n
    return tuple(tuple(diff(theta.theta[i], VarId.y(j + 1)) for j in range(n)) for i in range(n))


def _vertical_defect(theta: SemiBasicOneForm) -> tuple:
    """theta_i - d theta_0 / d y^i, the dt^delta y slot of d theta."""
    return tuple(sub(theta.theta[i], diff(theta.theta0, VarId.y(i + 1))) for i in range(theta.n))


def d_J(theta: SemiBasicOneForm, S: Semispray) -> SemiBasicTwoForm:
    _check(theta, S)
    n = theta.n
    a = multiplier(theta)
    upper = [[None] * n for _ in range(n)]
    for j in range(n):
        for i in range(j + 1, n):
            upper[j][i] = sub(a[i][j], a[j][i])
    return SemiBasicTwoForm(_vertical_defect(theta), _antisym2(upper))


def d_h(theta: SemiBasicOneForm, S: Semispray) -> SemiBasicTwoForm:
    """Time slot uses S(theta_i), the derivative dual to dt in the adapted frame."""
    _check(theta, S)
    n = theta.n
    N = connection(S).N_spatial
    c_time = []
    for i in range(n):
        c_time.append(
            add(
                s_derivative(S, theta.theta[i]),
                mul(-1, add(*(mul(theta.theta[j], N[j][i]) for j in range(n)))),
                mul(-1, delta_derivative(S, theta.theta0, i + 1)),
            )
        )
    upper = [[None] * n for _ in range(n)]
    for j in range(n):
        for i in range(j + 1, n):
            upper[j][i] = sub(delta_derivative(S, theta.theta[i], j + 1), delta_derivative(S, theta.theta[j], i + 1))
    return SemiBasicTwoForm(tuple(c_time), _antisym2(upper))


def d_phi(theta: SemiBasicOneForm, S: Semispray) -> SemiBasicTwoForm:
    """R^j_i (theta_j - d theta_0/dy^j) dt^dx^i + (a_jk R^k_i - a_ik R^k_j) on (delta_j, delta_i)."""
    _check(theta, S)
    n = theta.n
    Phi = jacobi(S)
    a = multiplier(theta)
    w = _vertical_defect(theta)
    c_time = tuple(add(*(mul(Phi[j][i], w[j]) for j in range(n))) for i in range(n))
    upper = [[None] * n for _ in range(n)]
    for j in range(n):
        for i in range(j + 1, n):
            upper[j][i] = sub(
                add(*(mul(a[j][k], Phi[k][i]) for k in range(n))),
                add(*(mul(a[i][k], Phi[k][j]) for k in range(n))),
            )
    return SemiBasicTwoForm(c_time, _antisym2(upper))


def d_R(theta: SemiBasicOneForm, S: Semispray) -> SemiBasicThreeForm:
    """d_R theta = i_R d theta for the curvature R = 1/2[h, h].

    c_space[i][j][k] = a_il R^l_jk + a_jl R^l_ki + a_kl R^l_ij
    c_time[i][j]     = a_jk R^k_i - a_ik R^k_j - R^l_ij (theta_l - d theta_0/dy^l)

    The last time term vanishes whenever the dt^delta y slot of d_J theta does.
    """
    _check(theta, S)
    n = theta.n
    cv = curvature(S)
    R3, Phi = cv.R3, cv.Phi
    a = multiplier(theta)
    w = _vertical_defect(theta)

    def aR(i, j, k):
        return add(*(mul(a[i][l], R3[l][j][k]) for l in range(n)))

    c_space = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for i, j, k in itertools.combinations(range(n), 3):
        val = add(aR(i, j, k), aR(j, k, i), aR(k, i, j))
        for perm in itertools.permutations((0, 1, 2)):
            idx = [(i, j, k)[p] for p in perm]
            sign = 1 if _even(perm) else -1
            c_space[idx[0]][idx[1]][idx[2]] = val if sign > 0 else mul(-1, val)
    c_time = [[ZERO] * n for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        val = add(
            add(*(mul(a[j][k], Phi[k][i]) for k in range(n))),
            mul(-1, add(*(mul(a[i][k], Phi[k][j]) for k in range(n)))),
            mul(-1, add(*(mul(R3[l][i][j], w[l]) for l in range(n)))),
        )
        c_time[i][j] = val
        c_time[j][i] = mul(-1, val)
    return SemiBasicThreeForm(
        tuple(tuple(r) for r in c_time), tuple(tuple(tuple(r) for r in m) for m in c_space)
    )


def _even(perm) -> bool:
    inv = sum(1 for x in range(len(perm)) for y in range(x + 1, len(perm)) if perm[x] > perm[y])
    return inv % 2 == 0


def wedge_dt(w: SemiBasicTwoForm) -> SemiBasicThreeForm:
    """w ^ dt: (w^dt)(S, delta_i, delta_j) = w(delta_i, delta_j), no spatial part."""
    n = w.n
    zero3 = tuple(tuple((ZERO,) * n for _ in range(n)) for _ in range(n))
    return SemiBasicThreeForm(w.c_space, zero3)


def poincare_cartan(L: Lagrangian, S: Semispray | None = None) -> SemiBasicOneForm:
    """theta_L = L dt + d_J L, i.e. theta_0 = L and theta_i = dL/dy^i."""
    n = S.n if S is not None else _infer_n(L.L)
    return SemiBasicOneForm(L.L, tuple(diff(L.L, VarId.y(i + 1)) for i in range(n)))


def _infer_n(e: Expr) -> int:
    from .expr import max_index

    return max(1, max_index(e))


def contract_S(theta: SemiBasicOneForm) -> Expr:
    """i_S theta = theta_0, since delta x^i(S) = 0."""
    return theta.theta0


def metric_tensor(L: Lagrangian, n: int) -> tuple:
    return tuple(
        tuple(diff(diff(L.L, VarId.y(i + 1)), VarId.y(j + 1)) for j in range(n)) for i in range(n)
    )


RANK_THRESHOLD = 1e-8


def numeric_rank(M: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    """Rank by Gaussian elimination with full pivoting, relative threshold."""
    A = np.array(M, dtype=float)
    if A.size == 0:
        return 0
    scale = max(1.0, float(np.max(np.abs(A))))
    r = 0
    rows, cols = A.shape
    for _ in range(min(rows, cols)):
        sub_ = np.abs(A[r:, r:])
        p = np.unravel_index(np.argmax(sub_), sub_.shape)
        if sub_[p] <= threshold * scale:
            break
        pi, pj = p[0] + r, p[1] + r
        A[[r, pi]] = A[[pi, r]]
        A[:, [r, pj]] = A[:, [pj, r]]
        A[r + 1 :] -= np.outer(A[r + 1 :, r] / A[r, r], A[r])
        r += 1
    return r


@dataclass
class MetricResult:
    g: tuple
    regular: bool
    min_rank: int
    points: int


def metric_with_regularity(L: Lagrangian, n: int, cfg: ZeroTestConfig | None = None) -> MetricResult:
    """g_ij and whether it has rank n at every sample point."""
    cfg = cfg or ZeroTestConfig()
    g = metric_tensor(L, n)
    flat = [e for row in g for e in row]
    pts = sample_points(flat + [L.L], cfg, n).points
    ranks = [numeric_rank(np.array([[evaluate(e, p) for e in row] for row in g])) for p in pts]
    if not ranks:
        raise InconclusiveError("metric could not be evaluated at any sample point")
    return MetricResult(g, min(ranks) == n, min(ranks), len(pts))


def dtheta_matrix(theta: SemiBasicOneForm, S: Semispray) -> list:
    """Symbolic (2n+1)x(2n+1) matrix of d theta on the adapted frame {S, delta_i, d/dy^i}."""
    n = theta.n
    dh = d_h(theta, S)
    w = _vertical_defect(theta)
    a = multiplier(theta)
    m = 2 * n + 1
    M = [[ZERO] * m for _ in range(m)]

    def put(r, c, e):
        M[r][c] = e
        M[c][r] = mul(-1, e)

    for i in range(n):
        put(0, 1 + i, dh.c_time[i])
        put(0, n + 1 + i, w[i])  # d theta(S, d/dy^i) = theta_i - d theta_0/dy^i
        for j in range(n):
            if j > i:
                put(1 + i, 1 + j, dh.c_space[i][j])
            put(n + 1 + j, 1 + i, a[i][j])  # d theta(d/dy^j, delta_i) = a_ij
    return M


def rank_dtheta(theta: SemiBasicOneForm, S: Semispray, cfg: ZeroTestConfig | None = None) -> int:
    cfg = cfg or ZeroTestConfig()
    M = dtheta_matrix(theta, S)
    flat = [e for row in M for e in row]
    pts = sample_points(flat, cfg, S.n).points
    if not pts:
        raise InconclusiveError("d theta could not be evaluated at any sample point")
    return max(numeric_rank(np.array([[evaluate(e, p) for e in row] for row in M])) for p in pts)


class PreconditionError(ValueError):
    """The operation requires d_J theta = 0."""


def reconstruction_identity(theta: SemiBasicOneForm, S: Semispray, cfg: ZeroTestConfig | None = None) -> bool:
    """If d_J theta = 0 then theta = (i_S theta) dt + d_J(i_S theta)."""
    cfg = cfg or ZeroTestConfig()
    if not all(is_zero(e, cfg, S.n) for e in d_J(theta, S).components()):
        raise PreconditionError("d_J theta does not vanish")
    L = contract_S(theta)
    return all(is_zero(sub(theta.theta[i], diff(L, VarId.y(i + 1))), cfg, S.n) for i in range(theta.n))


# ---------------------------------------------------------------------------
# numeric oracles


def _two_form_values(w: SemiBasicTwoForm, p: Point):
    n = w.n
    c_time = np.array([evaluate(e, p) for e in w.c_time])
    c_space = np.array([[evaluate(w.c_space[j][i], p) for i in range(n)] for j in range(n)])
    return c_time, c_space


def _three_form_values(w: SemiBasicThreeForm, p: Point):
    n = w.n
    c_time = np.array([[evaluate(e, p) for e in row] for row in w.c_time])
    c_space = np.array([[[evaluate(e, p) for e in row] for row in m] for m in w.c_space])
    return c_time, c_space


def contraction_oracle(theta: SemiBasicOneForm, S: Semispray, p: Point) -> dict:
    """d_J theta and d_h theta from the contraction identities, evaluated numerically.

    d_J theta(X, Y) = d theta(JX, Y) + d theta(X, JY)
    d_h theta(X, Y) = d theta(hX, Y) + d theta(X, hY) - d theta(X, Y)
    """
    from . import tensorfd

    orc = tensorfd.FormOracle(theta, S)
    z = p.as_array()
    dJ = orc.adapted(orc.dJ_natural(z), z)
    dh = orc.adapted(orc.dh_natural(z), z)
    n = S.n
    return {
        "d_J": tensorfd.two_form_components(dJ, n),
        "d_h": tensorfd.two_form_components(dh, n),
        "leak": max(tensorfd.vertical_leak(dh, n), 0.0),
    }


def d_R_oracle(theta: SemiBasicOneForm, S: Semispray, p: Point):
    """(c_time, c_space) of i_R d theta - d(theta o R) with R = 1/2[h,h] by finite differences."""
    from . import tensorfd

    orc = tensorfd.FormOracle(theta, S)
    z = p.as_array()
    w = orc.adapted(orc.dR_natural(z), z)
    return tensorfd.three_form_components(w, S.n)


def oracle_errors(theta: SemiBasicOneForm, S: Semispray, points: Sequence[Point]) -> dict:
    """Max abs difference between coordinate formulas and numeric oracles."""
    dJ, dh, dR = d_J(theta, S), d_h(theta, S), d_R(theta, S)
    err = {"d_J": 0.0, "d_h": 0.0, "d_R": 0.0}
    for p in points:
        orc = contraction_oracle(theta, S, p)
        for key, form in (("d_J", dJ), ("d_h", dh)):
            t_sym, s_sym = _two_form_values(form, p)
            t_num, s_num = orc[key]
            err[key] = max(err[key], float(np.max(np.abs(t_sym - t_num), initial=0.0)),
                           float(np.max(np.abs(s_sym - s_num), initial=0.0)))
        t_sym, s_sym = _three_form_values(dR, p)
        t_num, s_num = d_R_oracle(theta, S, p)
        err["d_R"] = max(err["d_R"], float(np.max(np.abs(t_sym - t_num), initial=0.0)),
                         float(np.max(np.abs(s_sym - s_num), initial=0.0)))
    return err


def oracle_points(theta: SemiBasicOneForm, S: Semispray, cfg: ZeroTestConfig, count: int = 20) -> list:
    """Seeded points where theta, G and the symbolic outputs are all defined."""
    exprs = list(S.G) + theta.components()
    exprs += d_J(theta, S).components() + d_h(theta, S).components() + d_R(theta, S).components()
    plan = ZeroTestConfig(count, cfg.box, cfg.tolerance, cfg.seed, cfg.max_resamples)
    try:
        return sample_points(exprs, plan, S.n).points
    except DomainError:  # pragma: no cover - sample_points resamples instead
        return []
