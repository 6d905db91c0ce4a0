"""Numeric oracles: RK4 geodesics, Euler-Lagrange residuals and finite-difference
checks of symbolic derivatives."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import (
    DomainError,
    Expr,
    Point,
    VarId,
    ZeroTestConfig,
    compile_terms_vector,
    diff,
    evaluate,
    max_index,
    sample_point,
)
from .forms import Lagrangian
from .geometry import Semispray

FD_STEP = 1e-6


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # shape (samples, n)
    y: np.ndarray
    h: float
    method: str = "rk4"
    truncated: bool = False
    message: str = ""

    def __post_init__(self):
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    def point(self, k: int) -> Point:
        return Point(self.t[k], self.x[k], self.y[k])

    def consistency_residual(self) -> float:
        """max |(x(t+h) - x(t))/h - y(t+h/2)|, with y(t+h/2) from the trapezoid average."""
        if len(self) < 2:
            return 0.0
        dx = (self.x[1:] - self.x[:-1]) / self.h
        mid = 0.5 * (self.y[1:] + self.y[:-1])
        return float(np.max(np.abs(dx - mid)))

    def is_consistent(self, factor: float = 10.0) -> bool:
        return self.consistency_residual() <= factor * self.h ** 2

    def export(self) -> str:
        n = self.n
        out = io.StringIO()
        head = ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
        out.write(f"# method={self.method} h={self.h!r} samples={len(self)} truncated={str(self.truncated).lower()}\n")
        if self.truncated:
            out.write(f"# domain error: {self.message}\n")
        out.write("# " + "\t".join(head) + "\n")
        for k in range(len(self)):
            row = [self.t[k], *self.x[k], *self.y[k]]
            out.write("\t".join(format(float(v), ".17g") for v in row) + "\n")
        return out.getvalue()

    @classmethod
    def load(cls, text: str) -> "Trajectory":
        rows = [list(map(float, ln.split("\t"))) for ln in text.splitlines() if ln and not ln.startswith("#")]
        a = np.array(rows)
        n = (a.shape[1] - 1) // 2
        h = float(a[1, 0] - a[0, 0]) if len(a) > 1 else 0.0
        return cls(a[:, 0], a[:, 1 : n + 1], a[:, n + 1 :], h)


@dataclass(frozen=True)
class SamplePlan:
    seed: int = 0
    count: int = 40
    box: tuple = (0.1, 1.1)
    max_resamples: int = 10

    def config(self) -> ZeroTestConfig:
        return ZeroTestConfig(sample_count=self.count, box=self.box, seed=self.seed, max_resamples=self.max_resamples)

    @classmethod
    def from_config(cls, cfg: ZeroTestConfig) -> "SamplePlan":
        return cls(cfg.seed, cfg.sample_count, tuple(cfg.box), cfg.max_resamples)


def _accel(S) -> Callable:
    if isinstance(S, Semispray):
        G = compile_terms_vector(S.G)
    else:
        G = S

    def acc(t, x, y):
        with np.errstate(all="ignore"):
            return -2.0 * np.asarray(G(t, x, y), dtype=float)

    return acc


def integrate_geodesic(S, start: Point, h: float, steps: int) -> Trajectory:
    """Classical RK4 for x' = y, y' = -2G(t, x, y).

    ``S`` is a Semispray or a callable G(t, x, y).  A domain error stops the
    integration and returns the samples computed so far, flagged as truncated.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    n = start.n
    if isinstance(S, Semispray) and S.n != n:
        raise ValueError(f"start point has n={n} but the semispray has n={S.n}")
    acc = _accel(S)
    ts = np.empty(steps + 1)
    xs = np.empty((steps + 1, n))
    ys = np.empty((steps + 1, n))
    t0 = start.t
    ts[0], xs[0], ys[0] = t0, start.x, start.y
    k_done = 0
    message = ""
    for k in range(steps):
        t, x, y = ts[k], xs[k], ys[k]
        try:
            k1x, k1y = y, acc(t, x, y)
            k2x = y + 0.5 * h * k1y
            k2y = acc(t + 0.5 * h, x + 0.5 * h * k1x, k2x)
            k3x = y + 0.5 * h * k2y
            k3y = acc(t + 0.5 * h, x + 0.5 * h * k2x, k3x)
            k4x = y + h * k3y
            k4y = acc(t + h, x + h * k3x, k4x)
            nx = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            ny = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            if not (np.all(np.isfinite(nx)) and np.all(np.isfinite(ny))):
                raise DomainError("non-finite state")
        except (DomainError, np.linalg.LinAlgError) as exc:
            message = f"step {k + 1} (t={t + h:.17g}): {exc}"
            break
        ts[k + 1] = t0 + (k + 1) * h
        xs[k + 1], ys[k + 1] = nx, ny
        k_done = k + 1
    m = k_done + 1
    return Trajectory(ts[:m].copy(), xs[:m].copy(), ys[:m].copy(), h, "rk4", k_done < steps, message)


def euler_lagrange_residual(L: Lagrangian, S, traj: Trajectory) -> float:
    """max over interior samples and i of |d/dt(dL/dy^i) - dL/dx^i|.

    The time derivative is a central difference of dL/dy^i along the sampled
    path, independent of the symbolic semispray.  ``S`` is unused beyond
    documenting which semispray produced ``traj``.
    """
    n = traj.n
    p = compile_terms_vector([diff(L.L, VarId.y(i)) for i in range(1, n + 1)])
    q = compile_terms_vector([diff(L.L, VarId.x(i)) for i in range(1, n + 1)])
    if len(traj) < 3:
        return 0.0
    P = np.array([p(traj.t[k], traj.x[k], traj.y[k]) for k in range(len(traj))])
    dP = (P[2:] - P[:-2]) / (traj.t[2:] - traj.t[:-2])[:, None]
    Q = np.array([q(traj.t[k], traj.x[k], traj.y[k]) for k in range(1, len(traj) - 1)])
    return float(np.max(np.abs(dP - Q)))


def seeded_starts(n: int, count: int, seed: int = 0, box: tuple = (0.1, 1.1)) -> list:
    rng = np.random.default_rng(seed)
    lo, hi = box
    out = []
    for _ in range(count):
        v = rng.uniform(lo, hi, 2 * n + 1)
        out.append(Point(v[0], v[1 : n + 1], v[n + 1 :]))
    return out


@dataclass
class FDReport:
    max_rel_error: float
    points: int
    resampled: int
    worst: str = ""
    per_variable: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "max_rel_error": self.max_rel_error,
            "points": self.points,
            "resampled": self.resampled,
            "worst": self.worst,
            "per_variable": dict(self.per_variable),
        }


def _variables(n: int) -> list:
    return [VarId.t()] + [VarId.x(i) for i in range(1, n + 1)] + [VarId.y(i) for i in range(1, n + 1)]


def _shift(p: Point, v: VarId, d: float) -> Point:
    if v.kind == "T":
        return Point(p.t + d, p.x, p.y)
    if v.kind == "X":
        x = list(p.x)
        x[v.index - 1] += d
        return Point(p.t, x, p.y)
    y = list(p.y)
    y[v.index - 1] += d
    return Point(p.t, p.x, y)


def fd_check(e: Expr, plan: SamplePlan | None = None, n: int | None = None, step: float = FD_STEP) -> FDReport:
    """Compare diff(e, v) against central differences for every variable v.

    The relative error is |a - b| / max(1, |a|) with a the symbolic value.  A
    point where e or a derivative is undefined (or the stencil leaves the
    domain) is replaced by the plan's resampling sequence.
    """
    plan = plan or SamplePlan()
    cfg = plan.config()
    n = n or max(1, max_index(e))
    vars_ = _variables(n)
    derivs = [diff(e, v) for v in vars_]
    worst = 0.0
    where = ""
    per_var = {to_text_var(v): 0.0 for v in vars_}
    used = 0
    resampled = 0
    for slot in range(plan.count):
        for attempt in range(plan.max_resamples + 1):
            p = sample_point(cfg, n, slot, attempt)
            try:
                errs = []
                for v, d in zip(vars_, derivs):
                    a = evaluate(d, p)
                    b = (evaluate(e, _shift(p, v, step)) - evaluate(e, _shift(p, v, -step))) / (2 * step)
                    errs.append(abs(a - b) / max(1.0, abs(a)))
            except (DomainError, ValueError, OverflowError, ZeroDivisionError):
                resampled += 1
                continue
            used += 1
            for v, err in zip(vars_, errs):
                name = to_text_var(v)
                per_var[name] = max(per_var[name], err)
                if err > worst:
                    worst, where = err, f"d/d{name} at {p}"
            break
    return FDReport(worst, used, resampled, where, per_var)


def to_text_var(v: VarId) -> str:
    return "t" if v.kind == "T" else f"{v.kind.lower()}{v.index}"


__all__ = [
    "FDReport",
    "SamplePlan",
    "Trajectory",
    "euler_lagrange_residual",
    "fd_check",
    "integrate_geodesic",
    "seeded_starts",
]
