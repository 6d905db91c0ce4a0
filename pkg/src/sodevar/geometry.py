"""Nonlinear connection, curvature and Jacobi endomorphism of a semispray.

Index conventions: matrices are nested tuples indexed from 0, so
``N[i][j]`` holds N^{i+1}_{j+1}, ``Phi[i][j]`` holds R^{i+1}_{j+1} and
``R3[i][j][k]`` holds R^{i+1}_{j+1 k+1}.  Operations that take a single
spatial index (``delta_derivative``) use the 1-based range 1..n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .expr import (
    ZERO,
    Expr,
    InconclusiveError,
    Point,
    VarId,
    ZeroTestConfig,
    add,
    as_expr,
    diff,
    is_zero,
    max_index,
    mul,
    parse,
    simplify,
    sub,
    to_text,
    x,
    y,
)


@dataclass(frozen=True)
class Semispray:
    n: int
    G: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension n must be at least 1")
        G = tuple(simplify(as_expr(g)) for g in self.G)
        if len(G) != self.n:
            raise ValueError(f"expected {self.n} coefficients G^i, got {len(G)}")
        for g in G:
            if max_index(g) > self.n:
                raise ValueError(f"coefficient {to_text(g)} uses an index beyond n={self.n}")
        object.__setattr__(self, "G", G)

    @classmethod
    def parse(cls, n: int, texts: Sequence[str]) -> "Semispray":
        return cls(n, tuple(parse(s, n) for s in texts))

    @classmethod
    def zero(cls, n: int) -> "Semispray":
        return cls(n, (ZERO,) * n)

    def __str__(self):
        return "G = (" + ", ".join(to_text(g) for g in self.G) + ")"


@dataclass(frozen=True)
class Connection:
    N_spatial: tuple  # N[i][j] = dG^i/dy^j
    N_time: tuple  # N^i_0 = 2G^i - N^i_j y^j


@dataclass(frozen=True)
class Curvature:
    R3: tuple  # R3[i][j][k] = R^i_jk
    Phi: tuple  # Phi[i][j] = R^i_j


@dataclass
class ClassificationReport:
    is_flat: bool
    is_isotropic: bool
    lam: Expr | None = None
    alpha: tuple | None = None
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "is_flat": self.is_flat,
            "is_isotropic": self.is_isotropic,
            "lambda": to_text(self.lam) if self.lam is not None else None,
            "alpha": [to_text(a) for a in self.alpha] if self.alpha is not None else None,
            "notes": list(self.notes),
        }


def _check_index(S: Semispray, i: int) -> None:
    if not 1 <= i <= S.n:
        raise IndexError(f"index {i} outside 1..{S.n}")


@lru_cache(maxsize=256)
def connection(S: Semispray) -> Connection:
    n = S.n
    N = tuple(tuple(diff(S.G[i], VarId.y(j + 1)) for j in range(n)) for i in range(n))
    N0 = tuple(
        sub(mul(2, S.G[i]), add(*(mul(N[i][j], y(j + 1)) for j in range(n)))) for i in range(n)
    )
    return Connection(N, N0)


def s_derivative(S: Semispray, e) -> Expr:
    """S(e) = de/dt + y^j de/dx^j - 2 G^j de/dy^j."""
    e = as_expr(e)
    terms = [diff(e, VarId.t())]
    for j in range(1, S.n + 1):
        terms.append(mul(y(j), diff(e, VarId.x(j))))
        terms.append(mul(-2, S.G[j - 1], diff(e, VarId.y(j))))
    return add(*terms)


def delta_derivative(S: Semispray, e, i: int) -> Expr:
    """de/dx^i - N^j_i de/dy^j, for 1 <= i <= n."""
    _check_index(S, i)
    e = as_expr(e)
    N = connection(S).N_spatial
    terms = [diff(e, VarId.x(i))]
    for j in range(S.n):
        terms.append(mul(-1, N[j][i - 1], diff(e, VarId.y(j + 1))))
    return add(*terms)


@lru_cache(maxsize=256)
def jacobi(S: Semispray) -> tuple:
    """R^i_j = 2 dG^i/dx^j - N^i_k N^k_j - S(N^i_j)."""
    n = S.n
    N = connection(S).N_spatial
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            nn = add(*(mul(N[i][k], N[k][j]) for k in range(n)))
            row.append(add(mul(2, diff(S.G[i], VarId.x(j + 1))), mul(-1, nn), mul(-1, s_derivative(S, N[i][j]))))
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=256)
def curvature(S: Semispray) -> Curvature:
    """R^i_jk = delta_k N^i_j - delta_j N^i_k, together with Phi."""
    n = S.n
    N = connection(S).N_spatial
    R3 = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j + 1, n):
                r = sub(delta_derivative(S, N[i][j], k + 1), delta_derivative(S, N[i][k], j + 1))
                R3[i][j][k] = r
                R3[i][k][j] = mul(-1, r)
    R3 = tuple(tuple(tuple(row) for row in mat) for mat in R3)
    return Curvature(R3, jacobi(S))


# ---------------------------------------------------------------------------
# numeric cross-checks


def fn_bracket_oracle(S: Semispray, p: Point) -> dict:
    """Numeric 1/2[h,h], [J,Phi] and related tensors at p, in the adapted frame.

    Returns arrays indexed [component][slot1][slot2] over the adapted frame
    {S, delta_1..delta_n, d/dy^1..d/dy^n}.  See ``tensorfd`` for the
    bracket convention.
    """
    from . import tensorfd

    return tensorfd.bracket_report(S, p)


@dataclass
class IdentityResult:
    name: str
    passed: bool
    max_error: float
    method: str

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "max_error": self.max_error, "method": self.method}


def structure_identities(S: Semispray, cfg: ZeroTestConfig | None = None, points: int = 5,
                         tol: float = 1e-4) -> list:
    """Check the structural identities of the induced connection at sample points.

    J^2 = 0, h^2 = h, Gamma^2 = Id and F^3 + F = 0 are checked on the frame
    matrices with h, Gamma, F built from Lie derivatives along S; [J, h] = 0,
    1/2[J, J] = -J^dt, Phi = i_S R and [J, Phi] = 3R + Phi^dt through the
    bracket oracle.
    """
    from . import tensorfd
    from .expr import sample_points

    cfg = cfg or ZeroTestConfig()
    exprs = list(S.G) + [e for row in jacobi(S) for e in row]
    plan = ZeroTestConfig(points, cfg.box, cfg.tolerance, cfg.seed, cfg.max_resamples)
    pts = sample_points(exprs, plan, S.n).points
    worst: dict = {}
    for p in pts:
        for name, (err, method) in tensorfd.structure_errors(S, p).items():
            prev = worst.get(name, (0.0, method))
            worst[name] = (max(prev[0], err), method)
    out = []
    for name, (err, method) in worst.items():
        limit = 1e-12 if method == "exact" else tol
        out.append(IdentityResult(name, err <= limit, err, method))
    return out


# ---------------------------------------------------------------------------
# classification


ISOTROPY_NOTE = (
    "Phi is nonzero but nilpotent (strictly triangular); it is not of the form "
    "lambda*Id, so the semispray is not isotropic under the Phi = lambda J test"
)


def classify(S: Semispray, cfg: ZeroTestConfig | None = None) -> ClassificationReport:
    cfg = cfg or ZeroTestConfig()
    n = S.n
    Phi = jacobi(S)
    notes: list = []

    def zero(e) -> bool:
        return is_zero(e, cfg, n)

    zero_entries = [[zero(Phi[i][j]) for j in range(n)] for i in range(n)]
    is_flat = all(all(r) for r in zero_entries)
    off_diag_zero = all(zero_entries[i][j] for i in range(n) for j in range(n) if i != j)
    diag_equal = off_diag_zero and all(zero(sub(Phi[i][i], Phi[0][0])) for i in range(1, n))
    is_isotropic = is_flat or diag_equal
    if is_flat:
        notes.append("Phi vanishes identically: flat semispray (R = 0)")
    if not is_isotropic:
        upper = all(zero_entries[i][j] for i in range(n) for j in range(n) if i >= j)
        lower = all(zero_entries[i][j] for i in range(n) for j in range(n) if i <= j)
        if upper or lower:
            notes.append(ISOTROPY_NOTE)
        return ClassificationReport(False, False, None, None, notes)

    lam = simplify(add(*(Phi[i][i] for i in range(n))) / n)
    alpha = (lam,) + tuple(simplify(diff(lam, VarId.y(i + 1)) / 3) for i in range(n))
    if not is_flat and n == 1:
        notes.append("n = 1: a 1x1 Jacobi endomorphism is always isotropic")
    # R = alpha ^ J, i.e. R^k_ij = alpha_i delta^k_j - alpha_j delta^k_i
    R3 = curvature(S).R3
    ok = True
    try:
        for k in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    expected = ZERO
                    if k == j:
                        expected = add(expected, alpha[i + 1])
                    if k == i:
                        expected = sub(expected, alpha[j + 1])
                    if not zero(sub(R3[k][i][j], expected)):
                        ok = False
    except InconclusiveError:
        ok = False
    notes.append("curvature has the form alpha ^ J" if ok else "curvature check R = alpha ^ J failed")
    return ClassificationReport(is_flat, True, lam, alpha, notes)
