"""Exact symbol computations for the operator P = (d_J, d_h).

Everything lives at a single point of the jet bundle and is expressed in the
frame {h_0 = S, h_1..h_n, v_1..v_n} with v_i = J h_i.  Semi-basic slots only
see the horizontal vectors h_alpha, so a tensor is stored by its values on
frame vectors.  Frame vectors are numbered 0..n (h_alpha) and n+1..2n (v_i).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable

Vec = dict  # frame index -> Fraction, a tangent vector in the frame


# ---------------------------------------------------------------------------
# exact sparse matrices


@dataclass
class RationalMatrix:
    rows: int
    cols: int
    data: list = field(default_factory=list)  # list of {col: Fraction}, one per row

    @classmethod
    def from_rows(cls, rows: list, cols: int) -> "RationalMatrix":
        clean = [{c: Fraction(v) for c, v in r.items() if v} for r in rows]
        return cls(len(clean), cols, clean)

    @classmethod
    def from_dense(cls, dense) -> "RationalMatrix":
        dense = [list(r) for r in dense]
        cols = len(dense[0]) if dense else 0
        return cls.from_rows([{j: v for j, v in enumerate(r)} for r in dense], cols)

    def to_dense(self) -> list:
        return [[r.get(j, Fraction(0)) for j in range(self.cols)] for r in self.data]

    def entries(self) -> set:
        return {v for r in self.data for v in r.values()}

    def matmul(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = []
        for r in self.data:
            acc: dict = {}
            for k, a in r.items():
                for j, b in other.data[k].items():
                    acc[j] = acc.get(j, 0) + a * b
            out.append(acc)
        return RationalMatrix.from_rows(out, other.cols)

    def vstack(self, extra: list) -> "RationalMatrix":
        return RationalMatrix.from_rows(self.data + list(extra), self.cols)

    def apply(self, vec: dict) -> list:
        return [sum((a * vec.get(c, 0) for c, a in r.items()), Fraction(0)) for r in self.data]

    def is_zero(self) -> bool:
        return not any(self.data)

    def rank(self) -> int:
        return rank(self.data)


def rank(rows: Iterable[dict]) -> int:
    """Exact rank by incremental row echelon reduction."""
    pivots: dict = {}
    for row in rows:
        r = {c: Fraction(v) for c, v in row.items() if v}
        while r:
            c = min(r)
            p = pivots.get(c)
            if p is None:
                lead = r[c]
                pivots[c] = {k: v / lead for k, v in r.items()}
                break
            f = r[c]
            for k, v in p.items():
                w = r.get(k, 0) - f * v
                if w:
                    r[k] = w
                else:
                    r.pop(k, None)
    return len(pivots)


def kernel_dim(m: RationalMatrix) -> int:
    return m.cols - m.rank()


# ---------------------------------------------------------------------------
# frame and endomorphisms


class Frame:
    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n
        self.size = 2 * n + 1

    def h(self, a: int) -> Vec:
        return {a: Fraction(1)}

    def v(self, i: int) -> Vec:
        return {self.n + i: Fraction(1)}

    def is_horizontal(self, f: int) -> bool:
        return f <= self.n

    def label(self, f: int) -> str:
        return f"h{f}" if f <= self.n else f"v{f - self.n}"

    def J(self, u: Vec) -> Vec:
        # J S = 0, J h_i = v_i, J v_i = 0
        return {self.n + f: c for f, c in u.items() if 1 <= f <= self.n}

    def hproj(self, u: Vec) -> Vec:
        return {f: c for f, c in u.items() if f <= self.n}

    def endo(self, name: str) -> Callable[[Vec], Vec]:
        return {"J": self.J, "h": self.hproj}[name]

    def basis(self) -> list:
        return [{f: Fraction(1)} for f in range(self.size)]


def _combine(acc: dict, lin: dict, c) -> None:
    for k, v in lin.items():
        w = acc.get(k, 0) + c * v
        if w:
            acc[k] = w
        else:
            acc.pop(k, None)


# ---------------------------------------------------------------------------
# fibers


class Fiber1:
    """T* (x) T_v*: coordinates A(f, beta) with f a frame index, beta horizontal.

    Labels are ('h', alpha, beta) and ('v', i, beta), ordered lexicographically.
    """

    def __init__(self, n: int):
        self.frame = Frame(n)
        self.n = n
        self.labels = [("h", a, b) for a in range(n + 1) for b in range(n + 1)]
        self.labels += [("v", i, b) for i in range(1, n + 1) for b in range(n + 1)]
        self.index = {lab: k for k, lab in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def coord(self, f: int, beta: int) -> int:
        if f <= self.n:
            return self.index[("h", f, beta)]
        return self.index[("v", f - self.n, beta)]

    def value(self, u: Vec, w: Vec) -> dict:
        """A(u, w) as a linear functional on the coordinates."""
        out: dict = {}
        for f, cu in u.items():
            for g, cw in w.items():
                if g <= self.n:
                    _combine(out, {self.coord(f, g): 1}, cu * cw)
        return out


class Fiber2:
    """S^2 T* (x) T_v*: coordinates B({f, g}, gamma), symmetric in the frame pair."""

    def __init__(self, n: int):
        self.frame = Frame(n)
        self.n = n
        size = self.frame.size
        pairs = [(f, g) for f in range(size) for g in range(f, size)]
        self.labels = sorted(
            ((self._tag(f), self._tag(g), c) for f, g in pairs for c in range(n + 1)),
        )
        self.index = {lab: k for k, lab in enumerate(self.labels)}

    def _tag(self, f: int) -> tuple:
        # plain (horizontal) labels sort before underlined (vertical) ones
        return (0, f) if f <= self.n else (1, f - self.n)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def coord(self, f: int, g: int, gamma: int) -> int:
        a, b = sorted((self._tag(f), self._tag(g)))
        return self.index[(a, b, gamma)]

    def value(self, u: Vec, w: Vec, z: Vec) -> dict:
        out: dict = {}
        for f, cu in u.items():
            for g, cw in w.items():
                for c, cz in z.items():
                    if c <= self.n:
                        _combine(out, {self.coord(f, g, c): 1}, cu * cw * cz)
        return out


def _horizontal_pairs(n: int) -> list:
    return list(itertools.combinations(range(n + 1), 2))


def _horizontal_triples(n: int) -> list:
    return list(itertools.combinations(range(n + 1), 3))


# ---------------------------------------------------------------------------
# symbols


def _tau1(frame: Frame, K: str, A: Callable[[Vec, Vec], dict], X: Vec, Y: Vec) -> dict:
    """(tau_K A)(X, Y) = A(KX, Y) - A(KY, X)."""
    k = frame.endo(K)
    out = dict(A(k(X), Y))
    _combine(out, A(k(Y), X), -1)
    return out


def _sigma1_rows(frame: Frame, A: Callable[[Vec, Vec], dict]) -> list:
    """sigma^1(P) A: tau_J A then tau_h A on horizontal pairs alpha < beta."""
    rows = []
    for K in ("J", "h"):
        for a, b in _horizontal_pairs(frame.n):
            rows.append(_tau1(frame, K, A, frame.h(a), frame.h(b)))
    return rows


def sigma1(n: int) -> RationalMatrix:
    fib = Fiber1(n)
    return RationalMatrix.from_rows(_sigma1_rows(fib.frame, fib.value), fib.dim)


def sigma2(n: int) -> RationalMatrix:
    """i_X(sigma^2(P) B) = sigma^1(P)(i_X B) for every frame vector X."""
    fib = Fiber2(n)
    rows = []
    for X in fib.frame.basis():
        rows += _sigma1_rows(fib.frame, lambda u, w, X=X: fib.value(X, u, w))
    return RationalMatrix.from_rows(rows, fib.dim)


def codomain2_dim(n: int) -> int:
    return (2 * n + 1) * n * (n + 1)


def _codomain2_coord(n: int, part: int, f: int, a: int, b: int) -> int:
    """Coordinate of (X = frame f, alpha < beta) in part 0 (d_J) or 1 (d_h)."""
    npairs = n * (n + 1) // 2
    k = _horizontal_pairs(n).index((a, b))
    return f * 2 * npairs + part * npairs + k


def _codomain2_value(n: int, part: int, u: Vec, w: Vec, z: Vec) -> dict:
    """C(u, w, z) where C is T* (x) Lambda^2 T_v*, on the chosen part."""
    out: dict = {}
    for f, cu in u.items():
        for a, cw in w.items():
            for b, cz in z.items():
                if a > n or b > n or a == b:
                    continue
                if a < b:
                    _combine(out, {_codomain2_coord(n, part, f, a, b): 1}, cu * cw * cz)
                else:
                    _combine(out, {_codomain2_coord(n, part, f, b, a): 1}, -cu * cw * cz)
    return out


def tau_K(frame: Frame, K: str, C: Callable, X: Vec, Y: Vec, Z: Vec) -> dict:
    """Alternating operator for a (1,1) tensor K on C in T* (x) Lambda^2.

    (tau_K C)(X1, X2, X3) = 1/(2! 1!) sum_sigma sgn(sigma) C(K X_s1, X_s2, X_s3).
    """
    k = frame.endo(K)
    args = (X, Y, Z)
    out: dict = {}
    for perm in itertools.permutations(range(3)):
        sign = _perm_sign(perm)
        a, b, c = (args[i] for i in perm)
        _combine(out, C(k(a), b, c), Fraction(sign, 2))
    return out


def _perm_sign(perm) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def tau(n: int) -> RationalMatrix:
    """tau = (tau_J C1, tau_h C2, tau_h C1 + tau_J C2) into three copies of Lambda^3 T_v*."""
    frame = Frame(n)
    C1 = lambda u, w, z: _codomain2_value(n, 0, u, w, z)  # noqa: E731
    C2 = lambda u, w, z: _codomain2_value(n, 1, u, w, z)  # noqa: E731
    rows = []
    for block in range(3):
        for a, b, c in _horizontal_triples(n):
            X, Y, Z = frame.h(a), frame.h(b), frame.h(c)
            if block == 0:
                rows.append(tau_K(frame, "J", C1, X, Y, Z))
            elif block == 1:
                rows.append(tau_K(frame, "h", C2, X, Y, Z))
            else:
                r = tau_K(frame, "h", C1, X, Y, Z)
                _combine(r, tau_K(frame, "J", C2, X, Y, Z), 1)
                rows.append(r)
    return RationalMatrix.from_rows(rows, codomain2_dim(n))


# ---------------------------------------------------------------------------
# dimension claims


def dim_g1_formula(n: int) -> int:
    return (n + 1) ** 2


def dim_g2_formula(n: int) -> int:
    return (n + 1) ** 2 * (n + 2) // 2


def cokernel_formula(n: int) -> int:
    return (n - 1) * n * (n + 1) // 2


def quasi_regular_basis(n: int, j: int = 1) -> list:
    """e_0 = S + h_j + v_n, e_1 = h_1, e_i = h_i + v_{i-1} for i = 2..n."""
    if not 1 <= j <= n:
        raise ValueError(f"j must lie in 1..{n}")
    frame = Frame(n)
    e0 = {0: Fraction(1)}
    _combine(e0, frame.h(j), 1)
    _combine(e0, frame.v(n), 1)
    basis = [e0, frame.h(1)]
    for i in range(2, n + 1):
        e = dict(frame.h(i))
        _combine(e, frame.v(i - 1), 1)
        basis.append(e)
    return basis


def quasi_regular_chain(n: int, j: int = 1) -> list:
    """[dim g1, dim (g1)_{e0}, dim (g1)_{e0 e1}, ..., dim (g1)_{e0..en}]."""
    fib = Fiber1(n)
    rows = _sigma1_rows(fib.frame, fib.value)
    chain = [fib.dim - rank(rows)]
    for e in quasi_regular_basis(n, j):
        rows = rows + [fib.value(e, fib.frame.h(b)) for b in range(n + 1)]
        chain.append(fib.dim - rank(rows))
    return chain


def chain_formula(n: int) -> list:
    return [dim_g1_formula(n)] + [(n + 1) * (n - k) for k in range(n + 1)]


def cokernel_dim(n: int, s2: RationalMatrix | None = None) -> int:
    s2 = s2 if s2 is not None else sigma2(n)
    return s2.rows - s2.rank()


def g2_basis(n: int) -> list:
    """Totally symmetric families spanning g^2, as coordinate vectors on Fiber2."""
    fib = Fiber2(n)
    frame = fib.frame
    vectors = []

    def add(entries):
        vec: dict = {}
        for f, g, c in entries:
            vec[fib.coord(f, g, c)] = Fraction(1)
        vectors.append(vec)

    # B_{alpha beta gamma}
    for ms in itertools.combinations_with_replacement(range(n + 1), 3):
        add({(a, b, c) for a, b, c in itertools.permutations(ms)})
    # B_{i jk} (one vertical slot) and B_{ij k} (two vertical slots)
    for ms in itertools.combinations_with_replacement(range(1, n + 1), 3):
        add({(n + a, b, c) for a, b, c in itertools.permutations(ms)})
        add({(n + a, n + b, c) for a, b, c in itertools.permutations(ms)})
    return vectors


@dataclass
class SymbolReport:
    n: int
    dim_g1: int
    dim_g2: int
    chain: list
    dim_cokernel: int
    rank_sigma2: int
    dim_ker_tau: int
    tau_sigma2_zero: bool
    entries_ok: bool

    @property
    def chain_sum(self) -> int:
        return sum(self.chain)

    @property
    def restricted_chain(self) -> list:
        """dim (g1)_{e0..ek} for k = 0..n, without the leading dim g1."""
        return list(self.chain[1:])

    @property
    def checks(self) -> dict:
        n = self.n
        return {
            "dim_g1": self.dim_g1 == dim_g1_formula(n),
            "dim_g2": self.dim_g2 == dim_g2_formula(n),
            "chain": self.chain == chain_formula(n),
            "quasi_regular": self.chain[0] == self.dim_g1 and self.chain_sum == self.dim_g2,
            "cokernel": self.dim_cokernel == cokernel_formula(n),
            "tau_sigma2_zero": self.tau_sigma2_zero,
            "exact": self.rank_sigma2 == self.dim_ker_tau,
            "entries": self.entries_ok,
        }

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "dim_g1": self.dim_g1,
            "dim_g2": self.dim_g2,
            "chain": list(self.chain),
            "restricted_chain": self.restricted_chain,
            "dim_cokernel": self.dim_cokernel,
            "rank_sigma2": self.rank_sigma2,
            "dim_ker_tau": self.dim_ker_tau,
            "checks": self.checks,
            "all_pass": self.all_pass,
        }


ALLOWED_ENTRIES = {Fraction(0), Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-1, 2)}


def symbol_report(n: int) -> SymbolReport:
    s1 = sigma1(n)
    s2 = sigma2(n)
    t = tau(n)
    rank2 = s2.rank()
    dim_ker_tau = t.cols - t.rank()
    return SymbolReport(
        n=n,
        dim_g1=kernel_dim(s1),
        dim_g2=s2.cols - rank2,
        chain=quasi_regular_chain(n),
        dim_cokernel=s2.rows - rank2,
        rank_sigma2=rank2,
        dim_ker_tau=dim_ker_tau,
        tau_sigma2_zero=t.matmul(s2).is_zero(),
        entries_ok=all(m.entries() <= ALLOWED_ENTRIES for m in (s1, s2, t)),
    )


def lambda3_dim(n: int) -> int:
    return comb(n + 1, 3)
