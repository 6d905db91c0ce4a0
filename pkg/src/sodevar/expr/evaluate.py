"""Numeric evaluation and the sampling zero test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import (
    Add,
    Const,
    Div,
    DomainError,
    Expr,
    Func,
    Mul,
    Neg,
    Pow,
    Var,
    as_expr,
    max_index,
    terms_of,
    to_text,
)


class InconclusiveError(RuntimeError):
    """The zero test could not find enough points inside the domain."""


@dataclass(frozen=True)
class Point:
    t: float
    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        object.__setattr__(self, "t", float(self.t))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if not all(math.isfinite(v) for v in (self.t,) + self.x + self.y):
            raise ValueError("point coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array((self.t,) + self.x + self.y)

    @classmethod
    def from_array(cls, arr) -> "Point":
        arr = [float(v) for v in arr]
        n = (len(arr) - 1) // 2
        return cls(arr[0], arr[1 : n + 1], arr[n + 1 :])

    def __str__(self):
        xs = ", ".join(f"x{i + 1}={v:.6g}" for i, v in enumerate(self.x))
        ys = ", ".join(f"y{i + 1}={v:.6g}" for i, v in enumerate(self.y))
        return f"(t={self.t:.6g}, {xs}, {ys})"


@dataclass(frozen=True)
class ZeroTestConfig:
    sample_count: int = 40
    box: tuple = (0.1, 1.1)
    tolerance: float = 1e-9
    seed: int = 0
    max_resamples: int = 10

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        if self.max_resamples < 1:
            raise ValueError("max_resamples must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        lo, hi = self.box
        object.__setattr__(self, "box", (float(lo), float(hi)))
        if not lo < hi:
            raise ValueError("box must be a nonempty interval")


# ---------------------------------------------------------------------------
# code generation

_MATH = {"sin": "math.sin", "cos": "math.cos", "exp": "math.exp", "ln": "math.log", "sqrt": "math.sqrt"}


class _Compiler:
    def __init__(self):
        self.lines: list[str] = []
        self.names: dict = {}

    def emit(self, e: Expr) -> str:
        name = self.names.get(e)
        if name is not None:
            return name
        if isinstance(e, Const):
            v = e.value
            return repr(float(v)) if v.denominator != 1 else f"{v.numerator}.0"
        if isinstance(e, Var):
            v = e.var
            if v.kind == "T":
                return "t"
            return f"{'x' if v.kind == 'X' else 'y'}[{v.index - 1}]"
        if isinstance(e, Func):
            code = f"{_MATH[e.name]}({self.emit(e.arg)})"
        elif isinstance(e, Add):
            code = " + ".join(self.emit(a) for a in e.args)
        elif isinstance(e, Mul):
            code = " * ".join(self.emit(a) for a in e.args)
        elif isinstance(e, Pow):
            b = self.emit(e.base)
            code = f"{b} ** {e.exp}" if e.exp >= 0 else f"1.0 / {b} ** {-e.exp}"
        elif isinstance(e, Div):
            code = f"{self.emit(e.num)} / {self.emit(e.den)}"
        elif isinstance(e, Neg):
            code = f"-{self.emit(e.arg)}"
        else:
            raise TypeError(type(e).__name__)
        name = f"v{len(self.names)}"
        self.names[e] = name
        self.lines.append(f"    {name} = {code}")
        return name


@lru_cache(maxsize=20_000)
def compile_terms(e: Expr) -> Callable:
    """f(t, x, y) -> tuple of top-level summand values of the canonical form."""
    comp = _Compiler()
    outs = [comp.emit(term) for term in terms_of(e)]
    body = "\n".join(comp.lines)
    src = f"def _f(t, x, y):\n{body}\n    return ({', '.join(outs)},)\n"
    ns = {"math": math}
    exec(compile(src, f"<expr {to_text(e)[:60]}>", "exec"), ns)
    return ns["_f"]


def _walk(e: Expr, p: Point) -> float:
    """Slow evaluator used to name the node that leaves the domain."""
    vals = [_walk(c, p) for c in e.children()]
    try:
        if isinstance(e, Const):
            return float(e.value)
        if isinstance(e, Var):
            v = e.var
            return p.t if v.kind == "T" else (p.x if v.kind == "X" else p.y)[v.index - 1]
        if isinstance(e, Func):
            return getattr(math, {"ln": "log"}.get(e.name, e.name))(vals[0])
        if isinstance(e, Add):
            return math.fsum(vals)
        if isinstance(e, Mul):
            return math.prod(vals)
        if isinstance(e, Pow):
            return vals[0] ** e.exp if e.exp >= 0 else 1.0 / vals[0] ** -e.exp
        if isinstance(e, Div):
            return vals[0] / vals[1]
        if isinstance(e, Neg):
            return -vals[0]
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"{to_text(e)} is undefined at {p} ({exc})") from None
    raise TypeError(type(e).__name__)


def _fail(e: Expr, p: Point, exc: Exception):
    for term in terms_of(e):
        _walk(term, p)
    raise DomainError(f"{to_text(e)} is undefined at {p} ({exc})")


def eval_terms(e: Expr, p: Point) -> tuple:
    e = as_expr(e)
    if max_index(e) > p.n:
        raise ValueError(f"expression uses index {max_index(e)} but the point has n={p.n}")
    try:
        vals = compile_terms(e)(p.t, p.x, p.y)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        _fail(e, p, exc)
    if not all(math.isfinite(v) for v in vals):
        raise DomainError(f"{to_text(e)} is not finite at {p}")
    return vals


def evaluate(e: Expr, p: Point) -> float:
    """Numeric value of ``e`` at ``p``; raises DomainError off the domain."""
    return math.fsum(eval_terms(e, p))


def eval_with_scale(e: Expr, p: Point) -> tuple[float, float]:
    vals = eval_terms(e, p)
    return math.fsum(vals), max((abs(v) for v in vals), default=0.0)


# ---------------------------------------------------------------------------
# sampling


def sample_point(cfg: ZeroTestConfig, n: int, slot: int, attempt: int = 0) -> Point:
    """The point for a given slot/attempt; independent of evaluation order."""
    rng = np.random.default_rng((cfg.seed, slot, attempt))
    lo, hi = cfg.box
    return Point.from_array(rng.uniform(lo, hi, size=1 + 2 * n))


@dataclass
class SampleSet:
    """Points at which a batch of expressions is simultaneously defined."""

    points: list = field(default_factory=list)
    resampled: int = 0


def sample_points(exprs: Sequence[Expr], cfg: ZeroTestConfig, n: int) -> SampleSet:
    """One in-domain point per slot, shared by every expression in ``exprs``."""
    out = SampleSet()
    for slot in range(cfg.sample_count):
        for attempt in range(cfg.max_resamples + 1):
            p = sample_point(cfg, n, slot, attempt)
            try:
                for e in exprs:
                    eval_terms(e, p)
            except DomainError:
                out.resampled += 1
                continue
            out.points.append(p)
            break
        else:
            raise InconclusiveError(
                f"no in-domain point found for slot {slot} after {cfg.max_resamples} resamples"
            )
    return out


def is_zero(e: Expr, cfg: ZeroTestConfig | None = None, n: int | None = None) -> bool:
    """Probabilistic test that ``e`` vanishes identically on the sampling box.

    Raises InconclusiveError if some slot keeps landing outside the domain.
    """
    cfg = cfg or ZeroTestConfig()
    e = as_expr(e)
    n = max(n or 1, max_index(e), 1)
    if not terms_of(e) or terms_of(e) == (Const(0),):
        return True
    for slot in range(cfg.sample_count):
        for attempt in range(cfg.max_resamples + 1):
            p = sample_point(cfg, n, slot, attempt)
            try:
                value, scale = eval_with_scale(e, p)
            except DomainError:
                continue
            if abs(value) > cfg.tolerance * max(1.0, scale):
                return False
            break
        else:
            raise InconclusiveError(
                f"{to_text(e)}: no in-domain point for slot {slot} after {cfg.max_resamples} resamples"
            )
    return True


def compile_terms_vector(exprs: Sequence[Expr]) -> Callable:
    """f(t, x, y) -> numpy array of the values of ``exprs``; raises DomainError."""
    fns = [compile_terms(as_expr(e)) for e in exprs]
    exprs = [as_expr(e) for e in exprs]

    def f(t, x, y):
        out = np.empty(len(fns))
        for k, fn in enumerate(fns):
            try:
                out[k] = math.fsum(fn(t, x, y))
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise DomainError(f"{to_text(exprs[k])} is undefined at {Point(t, x, y)} ({exc})") from None
        if not np.all(np.isfinite(out)):
            raise DomainError("non-finite value in vector evaluation")
        return out

    return f


def max_abs(e: Expr, points: Sequence[Point]) -> float:
    return max((abs(evaluate(e, p)) for p in points), default=0.0)
