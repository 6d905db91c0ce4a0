"""Finite-difference tensor calculus in natural coordinates z = (t, x, y).

These routines only use the semispray coefficients G^i (and, for forms,
the components of theta) as black-box numeric functions.  They serve as
independent oracles for the symbolic coordinate formulas.

Conventions
-----------
A (1,1) tensor K is an m x m array with K[a, b] = dz^a(K d_b), m = 2n+1.
A vector-valued 2-form B is an m x m x m array B[c, a, b] = dz^c(B(d_a, d_b)).
Scalar k-forms are arrays w[a, b, ...] = w(d_a, d_b, ...).
The Frolicher-Nijenhuis bracket of (1,1) tensors is

    [K, L](X, Y) = [KX, LY] + [LX, KY] - K[LX, Y] - K[X, LY]
                   - L[KX, Y] - L[X, KY] + (KL + LK)[X, Y],

for which 1/2[h, h](d/dx^j, d/dx^k) reproduces R^i_jk = delta_k N^i_j - delta_j N^i_k.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .expr import Point, compile_terms_vector

EPS = 1e-3
_STENCIL = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def derivative(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray, eps: float = EPS) -> np.ndarray:
    """D[c, ...] = d f / d z^c, fourth-order central differences."""
    z = np.asarray(z, dtype=float)
    base = np.asarray(f(z))
    out = np.zeros((z.size,) + base.shape)
    for c in range(z.size):
        acc = np.zeros(base.shape)
        for k, w in _STENCIL:
            zz = z.copy()
            zz[c] += k * eps
            acc = acc + w * np.asarray(f(zz))
        out[c] = acc / eps
    return out


def split(z: np.ndarray, n: int):
    return z[0], z[1 : n + 1], z[n + 1 :]


class NumericSemispray:
    def __init__(self, S):
        self.n = S.n
        self.m = 2 * S.n + 1
        self._G = compile_terms_vector(S.G)

    def G(self, z) -> np.ndarray:
        t, x, y = split(z, self.n)
        return self._G(t, x, y)

    def N(self, z) -> np.ndarray:
        """N[i, j] = dG^i/dy^j by finite differences."""
        D = derivative(self.G, z)
        return D[self.n + 1 :].T.copy()

    def S(self, z) -> np.ndarray:
        n = self.n
        out = np.empty(self.m)
        out[0] = 1.0
        out[1 : n + 1] = z[n + 1 :]
        out[n + 1 :] = -2.0 * self.G(z)
        return out

    # adapted frame and coframe ------------------------------------------------

    def frame(self, z, N=None) -> np.ndarray:
        """Columns: S, delta_1..delta_n, d/dy^1..d/dy^n."""
        n, m = self.n, self.m
        N = self.N(z) if N is None else N
        E = np.zeros((m, m))
        E[:, 0] = self.S(z)
        for i in range(n):
            E[1 + i, 1 + i] = 1.0
            E[n + 1 :, 1 + i] = -N[:, i]
            E[n + 1 + i, n + 1 + i] = 1.0
        return E

    def coframe(self, z, N=None) -> np.ndarray:
        """Rows: dt, delta x^i = dx^i - y^i dt, delta y^i = dy^i + N^i_j dx^j + N^i_0 dt."""
        n, m = self.n, self.m
        N = self.N(z) if N is None else N
        _, _, y = split(z, n)
        C = np.zeros((m, m))
        C[0, 0] = 1.0
        N0 = 2.0 * self.G(z) - N @ y
        for i in range(n):
            C[1 + i, 1 + i] = 1.0
            C[1 + i, 0] = -y[i]
            C[n + 1 + i, n + 1 + i] = 1.0
            C[n + 1 + i, 1 : n + 1] = N[i]
            C[n + 1 + i, 0] = N0[i]
        return C

    # (1,1) tensors -----------------------------------------------------------

    def J(self, z) -> np.ndarray:
        n = self.n
        _, _, y = split(z, n)
        K = np.zeros((self.m, self.m))
        for i in range(n):
            K[n + 1 + i, 1 + i] = 1.0
            K[n + 1 + i, 0] = -y[i]
        return K

    def h(self, z) -> np.ndarray:
        E = self.frame(z)
        C = self.coframe(z)
        P = np.diag([1.0] * (self.n + 1) + [0.0] * self.n)
        return E @ P @ C

    def v(self, z) -> np.ndarray:
        return np.eye(self.m) - self.h(z)

    def dt_row(self) -> np.ndarray:
        r = np.zeros(self.m)
        r[0] = 1.0
        return r

    def lie_S(self, K: Callable, z) -> np.ndarray:
        """(L_S K) = (S . grad) K - DS K + K DS, with DS[a, c] = d S^a / d z^c."""
        dK = derivative(K, z)
        Sz = self.S(z)
        DS = derivative(self.S, z).T
        Kz = K(z)
        return np.einsum("c,cab->ab", Sz, dK) - DS @ Kz + Kz @ DS

    def gamma_lie(self, z) -> np.ndarray:
        """Gamma = -L_S J + S (x) dt."""
        return -self.lie_S(self.J, z) + np.outer(self.S(z), self.dt_row())

    def h_lie(self, z) -> np.ndarray:
        return 0.5 * (np.eye(self.m) + self.gamma_lie(z))

    def F_lie(self, z) -> np.ndarray:
        """F = h o L_S h - J."""
        return self.h_lie(z) @ self.lie_S(self.h_lie, z) - self.J(z)

    def F_local(self, z) -> np.ndarray:
        n = self.n
        E = self.frame(z)
        C = self.coframe(z)
        F = np.zeros((self.m, self.m))
        for i in range(n):
            F += np.outer(E[:, 1 + i], C[n + 1 + i]) - np.outer(E[:, n + 1 + i], C[1 + i])
        return F

    def phi_lie(self, z) -> np.ndarray:
        """Phi = v o L_S h."""
        return self.v(z) @ self.lie_S(self.h, z)

    def phi_from(self, Phi_fn: Callable) -> Callable:
        """Natural matrix of R^j_i d/dy^j (x) delta x^i with R^j_i from Phi_fn(z)."""
        n = self.n

        def field(z):
            P = Phi_fn(z)
            C = self.coframe(z)
            out = np.zeros((self.m, self.m))
            for i in range(n):
                for j in range(n):
                    out[n + 1 + j] += P[j, i] * C[1 + i]
            return out

        return field


def fn_bracket(K: Callable, L: Callable, z) -> np.ndarray:
    """[K, L] on coordinate fields; B[c, a, b]."""
    Kz, Lz = K(z), L(z)
    dK, dL = derivative(K, z), derivative(L, z)  # dK[c, p, q] = d_c K[p, q]
    # [K d_a, L d_b]^p = K[c, a] d_c L[p, b] - L[c, b] d_c K[p, a]
    term = np.einsum("ca,cpb->pab", Kz, dL) - np.einsum("cb,cpa->pab", Lz, dK)
    term2 = np.einsum("ca,cpb->pab", Lz, dK) - np.einsum("cb,cpa->pab", Kz, dL)
    # -K[L d_a, d_b] = K d_b(L d_a); -K[d_a, L d_b] = -K d_a(L d_b)
    t3 = np.einsum("pq,bqa->pab", Kz, dL) - np.einsum("pq,aqb->pab", Kz, dL)
    t4 = np.einsum("pq,bqa->pab", Lz, dK) - np.einsum("pq,aqb->pab", Lz, dK)
    return term + term2 + t3 + t4


def wedge_dt(K: np.ndarray) -> np.ndarray:
    """(K ^ dt)(X, Y) = K(X) dt(Y) - K(Y) dt(X) for a (1,1) tensor K."""
    m = K.shape[0]
    out = np.zeros((m, m, m))
    out[:, :, 0] += K
    out[:, 0, :] -= K
    return out


def to_adapted_vv2(B: np.ndarray, E: np.ndarray) -> np.ndarray:
    Einv = np.linalg.inv(E)
    return np.einsum("ip,pqr,qj,rk->ijk", Einv, B, E, E)


def to_adapted_11(K: np.ndarray, E: np.ndarray) -> np.ndarray:
    return np.linalg.solve(E, K @ E)


def i_S(B: np.ndarray, Sz: np.ndarray) -> np.ndarray:
    """(i_S B)(X) = B(S, X) as a (1,1) tensor."""
    return np.einsum("pab,a->pb", B, Sz)


# ---------------------------------------------------------------------------
# reports used by geometry


def _symbolic_phi(S) -> Callable:
    from .geometry import jacobi

    n = S.n
    f = compile_terms_vector([e for row in jacobi(S) for e in row])

    def Phi(z):
        t, x, y = split(z, n)
        return f(t, x, y).reshape(n, n)

    return Phi


def bracket_report(S, p: Point) -> dict:
    ns = NumericSemispray(S)
    z = p.as_array()
    E = ns.frame(z)
    half_hh = 0.5 * fn_bracket(ns.h, ns.h, z)
    Phi_field = ns.phi_from(_symbolic_phi(S))
    JPhi = fn_bracket(ns.J, Phi_field, z)
    rhs = 3.0 * half_hh + wedge_dt(Phi_field(z))
    return {
        "half_hh": to_adapted_vv2(half_hh, E),
        "J_Phi": to_adapted_vv2(JPhi, E),
        "three_R_plus_Phi_dt": to_adapted_vv2(rhs, E),
        "i_S_R": to_adapted_11(i_S(half_hh, ns.S(z)), E),
        "Phi_lie": to_adapted_11(ns.phi_lie(z), E),
    }


def curvature_from_bracket(S, p: Point):
    """(R3, Phi) numeric arrays read off 1/2[h, h] in the adapted frame."""
    n = S.n
    B = bracket_report(S, p)["half_hh"]
    R3 = np.zeros((n, n, n))
    Phi = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            Phi[i, j] = B[n + 1 + i, 0, 1 + j]
            for k in range(n):
                R3[i, j, k] = B[n + 1 + i, 1 + j, 1 + k]
    return R3, Phi


def _maxabs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def structure_errors(S, p: Point) -> dict:
    """name -> (max abs error, method) for the structural identities at p."""
    ns = NumericSemispray(S)
    z = p.as_array()
    m = ns.m
    I = np.eye(m)
    J = ns.J(z)
    h = ns.h(z)
    hl = ns.h_lie(z)
    G = ns.gamma_lie(z)
    F = ns.F_lie(z)
    E = ns.frame(z)
    half_hh = 0.5 * fn_bracket(ns.h, ns.h, z)
    rep = bracket_report(S, p)
    return {
        "J^2 = 0": (_maxabs(J @ J), "exact"),
        "h^2 = h": (_maxabs(hl @ hl - hl), "oracle"),
        "h = S(x)dt + delta_i(x)dx^i": (_maxabs(hl - h), "oracle"),
        "Gamma^2 = Id": (_maxabs(G @ G - I), "oracle"),
        "F^3 + F = 0": (_maxabs(F @ F @ F + F), "oracle"),
        "F local form": (_maxabs(F - ns.F_local(z)), "oracle"),
        "[J,h] = 0": (_maxabs(fn_bracket(ns.J, ns.h, z)), "oracle"),
        "1/2[J,J] = -J^dt": (_maxabs(0.5 * fn_bracket(ns.J, ns.J, z) + wedge_dt(J)), "oracle"),
        "R semi-basic": (_maxabs(to_adapted_vv2(half_hh, E)[:, n_vert(S) :, :]), "oracle"),
        "Phi = i_S R": (_maxabs(rep["i_S_R"] - rep["Phi_lie"]), "oracle"),
        "[J,Phi] = 3R + Phi^dt": (_maxabs(rep["J_Phi"] - rep["three_R_plus_Phi_dt"]), "oracle"),
    }


def n_vert(S) -> int:
    """First adapted-frame index of the vertical block."""
    return S.n + 1


# ---------------------------------------------------------------------------
# forms


def theta_natural(theta0: Callable, theta: Callable, n: int) -> Callable:
    """theta0 dt + theta_i delta x^i rewritten on dt, dx^i, dy^i."""

    def f(z):
        t, x, y = split(z, n)
        th = theta(t, x, y)
        out = np.zeros(2 * n + 1)
        out[0] = theta0(t, x, y) - float(np.dot(th, y))
        out[1 : n + 1] = th
        return out

    return f


def exterior_1(f: Callable, z) -> np.ndarray:
    """d of a 1-form field: W[a, b] = d_a f_b - d_b f_a."""
    D = derivative(f, z)
    return D - D.T


def exterior_2(w: Callable, z) -> np.ndarray:
    """d of a 2-form field: (dw)_abc = d_a w_bc + d_b w_ca + d_c w_ab."""
    D = derivative(w, z)
    return D + np.transpose(D, (1, 2, 0)) + np.transpose(D, (2, 0, 1))


def i_K_2form(K: np.ndarray, W: np.ndarray) -> np.ndarray:
    """(i_K w)(X, Y) = w(KX, Y) + w(X, KY)."""
    return K.T @ W + W @ K


def i_K_3form(K: np.ndarray, W: np.ndarray) -> np.ndarray:
    return (
        np.einsum("pa,pbc->abc", K, W)
        + np.einsum("pb,apc->abc", K, W)
        + np.einsum("pc,abp->abc", K, W)
    )


def i_vv2_2form(R: np.ndarray, W: np.ndarray) -> np.ndarray:
    """(i_R w)(X, Y, Z) = w(R(X,Y), Z) + w(R(Y,Z), X) + w(R(Z,X), Y)."""
    T = np.einsum("pab,pc->abc", R, W)
    return T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))


def wedge2_dt(w: np.ndarray) -> np.ndarray:
    """(w ^ dt)(X, Y, Z) = w(X,Y) dt(Z) + w(Y,Z) dt(X) + w(Z,X) dt(Y)."""
    m = w.shape[0]
    out = np.zeros((m, m, m))
    out[:, :, 0] += w
    out[0, :, :] += w
    out[:, 0, :] += w.T
    return out


def to_adapted_form(w: np.ndarray, E: np.ndarray) -> np.ndarray:
    if w.ndim == 2:
        return E.T @ w @ E
    return np.einsum("abc,ai,bj,ck->ijk", w, E, E, E)


class FormOracle:
    """Numeric d, d_J, d_h, d_R of a semi-basic 1-form theta."""

    def __init__(self, theta, S):
        self.ns = NumericSemispray(S)
        self.n = S.n
        th0 = compile_terms_vector([theta.theta0])
        th = compile_terms_vector(list(theta.theta))
        self.theta_nat = theta_natural(lambda t, x, y: th0(t, x, y)[0], th, self.n)

    def dtheta(self, z) -> np.ndarray:
        return exterior_1(self.theta_nat, z)

    def dJ_natural(self, z) -> np.ndarray:
        return i_K_2form(self.ns.J(z), self.dtheta(z))

    def dh_natural(self, z) -> np.ndarray:
        W = self.dtheta(z)
        return i_K_2form(self.ns.h(z), W) - W

    def dR_natural(self, z) -> np.ndarray:
        """i_R d theta - d(theta o R); theta o R vanishes since R is vertical-valued."""
        R = 0.5 * fn_bracket(self.ns.h, self.ns.h, z)
        return i_vv2_2form(R, self.dtheta(z))

    def theta_o_R(self, z) -> np.ndarray:
        R = 0.5 * fn_bracket(self.ns.h, self.ns.h, z)
        return np.einsum("p,pab->ab", self.theta_nat(z), R)

    def dJdJ_natural(self, z) -> np.ndarray:
        """d_J w = i_J dw - d(i_J w) applied to w = d_J theta."""
        J = self.ns.J
        dw = exterior_2(self.dJ_natural, z)
        iJw = lambda zz: i_K_2form(J(zz), self.dJ_natural(zz))  # noqa: E731
        return i_K_3form(J(z), dw) - exterior_2(iJw, z)

    def adapted(self, w: np.ndarray, z) -> np.ndarray:
        return to_adapted_form(w, self.ns.frame(z))


def two_form_components(w_ad: np.ndarray, n: int):
    """(c_time, c_space) with c_time[i] = w(S, delta_i), c_space[j][i] = w(delta_j, delta_i)."""
    c_time = np.array([w_ad[0, 1 + i] for i in range(n)])
    c_space = w_ad[1 : n + 1, 1 : n + 1].copy()
    return c_time, c_space


def three_form_components(w_ad: np.ndarray, n: int):
    c_time = w_ad[0, 1 : n + 1, 1 : n + 1].copy()
    c_space = w_ad[1 : n + 1, 1 : n + 1, 1 : n + 1].copy()
    return c_time, c_space


def vertical_leak(w_ad: np.ndarray, n: int) -> float:
    """Largest component with a vertical slot (zero for semi-basic forms)."""
    idx = np.indices(w_ad.shape)
    mask = np.any(idx > n, axis=0)
    return float(np.max(np.abs(w_ad[mask]))) if mask.any() else 0.0


def fd_error(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def finite(a) -> bool:
    return bool(np.all(np.isfinite(a)))

