"""Command line front end.

Problem files are JSON objects with the keys ``n``, ``G``, ``theta``, ``L``
and ``config``.  Human-readable text goes to stdout; ``--json-out`` writes the
machine report (sorted keys, no timings unless ``--timings``).

Exit codes: 0 success, 2 checks ran and failed, 3 inconclusive, 1 usage or
parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .expr import (
    DomainError,
    InconclusiveError,
    ParseError,
    Point,
    ZeroTestConfig,
    parse,
    to_text,
)
from .forms import Lagrangian, SemiBasicOneForm, contract_S
from .geometry import Semispray, classify, connection, curvature, jacobi, structure_identities
from .helmholtz import (
    DimensionTooLargeError,
    HelmholtzReport,
    SingularMetricError,
    Verdict,
    apply_P,
    numeric_semispray_from_lagrangian,
    obstruction,
    semispray_from_lagrangian,
    variationality_verdict,
    verify_lagrangian,
)
from .numeric import euler_lagrange_residual, integrate_geodesic, seeded_starts
from .spencer import symbol_report

EXIT_OK, EXIT_ERROR, EXIT_FAILED, EXIT_INCONCLUSIVE = 0, 1, 2, 3

TOP_KEYS = {"n", "G", "theta", "L", "config"}
THETA_KEYS = {"theta0", "theta"}
CONFIG_KEYS = {"seed", "samples", "box", "tolerance", "step", "steps"}
EL_TOLERANCE = 1e-6
EL_TRAJECTORIES = 10

DEFAULTS = {"seed": 0, "samples": 40, "box": [0.1, 1.1], "tolerance": 1e-9, "step": 1e-3, "steps": 1000}


class ProblemError(ValueError):
    """Invalid problem file: bad JSON, unknown keys or unparsable expressions."""

    def __init__(self, message: str, where: str = "", line: int | None = None, column: int | None = None):
        self.message = message
        self.where = where
        self.line = line
        self.column = column
        loc = f" [{where}]" if where else ""
        if line is not None:
            loc += f" at line {line}, column {column}"
        super().__init__(message + loc)

    def as_dict(self) -> dict:
        out: dict[str, Any] = {"message": self.message}
        if self.where:
            out["field"] = self.where
        if self.line is not None:
            out["line"] = self.line
            out["column"] = self.column
        return out


@dataclass
class ProblemFile:
    n: int
    G: list | None = None
    theta: dict | None = None
    L: str | None = None
    config: dict | None = None
    _exprs: dict = field(default_factory=dict, repr=False)

    def semispray(self) -> Semispray:
        if self.G is None:
            raise ProblemError("problem file has no G", "G")
        return Semispray(self.n, tuple(self._exprs["G"]))

    def one_form(self) -> SemiBasicOneForm:
        if self.theta is None:
            raise ProblemError("problem file has no theta", "theta")
        return SemiBasicOneForm(self._exprs["theta0"], tuple(self._exprs["theta"]))

    def lagrangian(self) -> Lagrangian:
        if self.L is None:
            raise ProblemError("problem file has no L", "L")
        return Lagrangian(self._exprs["L"])


def _parse_expr(text: Any, n: int, where: str):
    if not isinstance(text, str):
        raise ProblemError(f"expected a string, got {type(text).__name__}", where)
    try:
        return parse(text, n)
    except ParseError as exc:
        raise ProblemError(f"{exc.message} at position {exc.pos} in {text!r}", where) from None


def _str_list(v: Any, n: int, where: str) -> list:
    if not isinstance(v, list):
        raise ProblemError("expected a list of strings", where)
    if len(v) != n:
        raise ProblemError(f"expected {n} entries, got {len(v)}", where)
    return [_parse_expr(s, n, f"{where}[{i}]") for i, s in enumerate(v)]


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ProblemError(f"unknown key(s) {', '.join(map(repr, extra))}", where or "top level")


def _number(v: Any, where: str, integer: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemError("expected a number", where)
    if integer and not isinstance(v, int):
        raise ProblemError("expected an integer", where)
    if not math.isfinite(v):
        raise ProblemError("expected a finite number", where)
    return v


def load_problem(text: str) -> ProblemFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc.msg}", "", exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ProblemError("problem file must be a JSON object")
    _reject_unknown(raw, TOP_KEYS, "")
    if "n" not in raw:
        raise ProblemError("missing required key 'n'", "n")
    n = raw["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ProblemError("n must be a positive integer", "n")
    pf = ProblemFile(n)
    exprs: dict = {}
    if "G" in raw:
        pf.G = raw["G"]
        exprs["G"] = _str_list(raw["G"], n, "G")
    if "theta" in raw:
        th = raw["theta"]
        if not isinstance(th, dict):
            raise ProblemError("theta must be an object", "theta")
        _reject_unknown(th, THETA_KEYS, "theta")
        for k in ("theta0", "theta"):
            if k not in th:
                raise ProblemError(f"missing key {k!r}", "theta")
        pf.theta = th
        exprs["theta0"] = _parse_expr(th["theta0"], n, "theta.theta0")
        exprs["theta"] = _str_list(th["theta"], n, "theta.theta")
    if "L" in raw:
        pf.L = raw["L"]
        exprs["L"] = _parse_expr(raw["L"], n, "L")
    if "config" in raw:
        cfg = raw["config"]
        if not isinstance(cfg, dict):
            raise ProblemError("config must be an object", "config")
        _reject_unknown(cfg, CONFIG_KEYS, "config")
        for k in ("seed", "samples", "steps"):
            if k in cfg:
                _number(cfg[k], f"config.{k}", integer=True)
        for k in ("tolerance", "step"):
            if k in cfg:
                _number(cfg[k], f"config.{k}")
        if "box" in cfg:
            b = cfg["box"]
            if not (isinstance(b, list) and len(b) == 2):
                raise ProblemError("box must be a list [lo, hi]", "config.box")
            for i, v in enumerate(b):
                _number(v, f"config.box[{i}]")
        pf.config = cfg
    pf._exprs = exprs
    return pf


def resolve_config(pf: ProblemFile | None, args: argparse.Namespace) -> dict:
    """Defaults < problem file config < command line flags."""
    cfg = dict(DEFAULTS)
    if pf is not None and pf.config:
        cfg.update(pf.config)
    flags = {"seed": args.seed, "samples": args.samples, "tolerance": args.tol, "step": args.step, "steps": args.steps}
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg["box"] = [float(v) for v in cfg["box"]]
    try:
        zero_test_config(cfg)
    except ValueError as exc:
        raise ProblemError(str(exc), "config") from None
    if not cfg["step"] > 0:
        raise ProblemError("step must be positive", "config.step")
    if cfg["steps"] < 0:
        raise ProblemError("steps must be non-negative", "config.steps")
    return cfg


def zero_test_config(cfg: dict) -> ZeroTestConfig:
    return ZeroTestConfig(
        sample_count=int(cfg["samples"]), box=tuple(cfg["box"]), tolerance=float(cfg["tolerance"]), seed=int(cfg["seed"])
    )


def _matrix(m) -> list:
    return [[to_text(e) for e in row] for row in m]


def _exit_for(verdict: Verdict) -> int:
    if verdict in (Verdict.LAGRANGIAN_CONFIRMED, Verdict.FORMALLY_INTEGRABLE_CLASS):
        return EXIT_OK
    if verdict is Verdict.OBSTRUCTION_FAILS:
        return EXIT_FAILED
    return EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# commands: each returns (exit code, machine report, human lines)


def cmd_analyze(pf: ProblemFile, cfg: dict) -> tuple[int, dict, list]:
    S = pf.semispray()
    zc = zero_test_config(cfg)
    n = S.n
    conn = connection(S)
    curv = curvature(S)
    ids = structure_identities(S, zc)
    cls = classify(S, zc)
    R3 = {
        f"{i + 1},{j + 1},{k + 1}": to_text(curv.R3[i][j][k])
        for i in range(n) for j in range(n) for k in range(j + 1, n)
    }
    report = {
        "command": "analyze",
        "n": n,
        "G": [to_text(g) for g in S.G],
        "N": _matrix(conn.N_spatial),
        "N0": [to_text(e) for e in conn.N_time],
        "Phi": _matrix(jacobi(S)),
        "R": R3,
        "structure_identities": [r.as_dict() for r in ids],
        "classification": cls.as_dict(),
    }
    lines = [f"semispray n={n}: {S}"]
    lines.append("N^i_j = " + json.dumps(report["N"]))
    lines.append("N^i_0 = " + json.dumps(report["N0"]))
    lines.append("Phi (R^i_j) = " + json.dumps(report["Phi"]))
    for key, v in R3.items():
        lines.append(f"R^{key} = {v}")
    for r in ids:
        lines.append(f"identity {r.name}: {'pass' if r.passed else 'FAIL'} (err {r.max_error:.2e}, {r.method})")
    lines.append(f"flat={str(cls.is_flat).lower()} isotropic={str(cls.is_isotropic).lower()}")
    lines += [f"note: {s}" for s in cls.notes]
    code = EXIT_OK if all(r.passed for r in ids) else EXIT_FAILED
    return code, report, lines


def cmd_check_theta(pf: ProblemFile, cfg: dict) -> tuple[int, dict, list]:
    S = pf.semispray()
    theta = pf.one_form()
    zc = zero_test_config(cfg)
    dj, dh = apply_P(theta, S)
    w, _ = obstruction(theta, S, zc)
    rep = variationality_verdict(S, theta, zc)
    report = {
        "command": "check-theta",
        "n": S.n,
        "d_J theta": dj.as_dict(),
        "d_h theta": dh.as_dict(),
        "d_R theta": w.as_dict(),
        "helmholtz": rep.as_dict(),
    }
    lines = _helmholtz_lines(rep)
    if S.n == 1:
        lines.append("n = 1: obstruction d_R theta = 0 holds automatically")
    if rep.verdict is Verdict.LAGRANGIAN_CONFIRMED:
        lines.append(f"reconstructed L = {to_text(contract_S(theta))}")
    return _exit_for(rep.verdict), report, lines


def _helmholtz_lines(rep: HelmholtzReport) -> list:
    lines = [
        f"d_J theta = 0: {str(rep.dJ_zero).lower()}",
        f"d_h theta = 0: {str(rep.dh_zero).lower()}",
        f"d_R theta = 0: {str(rep.dR_zero).lower()}",
        f"rank d theta = {rep.rank_dtheta} (regular={str(rep.regular).lower()})",
    ]
    lines += [f"- {d}" for d in rep.details]
    lines.append(f"verdict: {rep.verdict.value}")
    return lines


def cmd_check_lagrangian(pf: ProblemFile, cfg: dict) -> tuple[int, dict, list]:
    L = pf.lagrangian()
    n = pf.n
    zc = zero_test_config(cfg)
    lines = [f"L = {to_text(L.L)}"]
    report: dict[str, Any] = {"command": "check-lagrangian", "n": n, "L": to_text(L.L)}
    numeric_only = False
    if pf.G is not None:
        S = pf.semispray()
        G_source = "file"
    else:
        try:
            S = semispray_from_lagrangian(L, n, zc)
            G_source = "derived"
        except SingularMetricError as exc:
            report["error"] = {"kind": "singular_metric", "message": str(exc)}
            lines.append(f"degenerate metric: {exc}")
            return EXIT_INCONCLUSIVE, report, lines
        except DimensionTooLargeError:
            S = None
            G_source = "numeric"
            numeric_only = True
    report["G_source"] = G_source
    if S is not None:
        report["G"] = [to_text(g) for g in S.G]
        lines.append(f"{'derived' if G_source == 'derived' else 'given'} {S}")
        rep = verify_lagrangian(L, S, zc)
        report["helmholtz"] = rep.as_dict()
        lines += _helmholtz_lines(rep)
        verdict = rep.verdict
        flow: Any = S
    else:
        lines.append(f"n={n} > 3: symbolic inversion skipped, numeric Euler-Lagrange check only")
        verdict = Verdict.INCONCLUSIVE
        report["helmholtz"] = None
        flow = numeric_semispray_from_lagrangian(L, n)

    residuals = []
    notes = []
    for k, p in enumerate(seeded_starts(n, EL_TRAJECTORIES, int(cfg["seed"]), tuple(cfg["box"]))):
        tr = integrate_geodesic(flow, p, float(cfg["step"]), int(cfg["steps"]))
        if tr.truncated:
            notes.append(f"trajectory {k} truncated: {tr.message}")
        try:
            residuals.append(euler_lagrange_residual(L, S, tr))
        except DomainError as exc:
            notes.append(f"trajectory {k}: residual undefined ({exc})")
    worst = max(residuals) if residuals else None
    residual_ok = worst is not None and worst <= EL_TOLERANCE
    report["euler_lagrange"] = {
        "trajectories": EL_TRAJECTORIES,
        "max_residual": worst,
        "tolerance": EL_TOLERANCE,
        "passed": residual_ok,
        "notes": notes,
    }
    lines.append(f"Euler-Lagrange residual over {len(residuals)} trajectories: "
                 f"{'n/a' if worst is None else format(worst, '.3e')} ({'pass' if residual_ok else 'FAIL'})")
    lines += notes
    if numeric_only:
        code = EXIT_INCONCLUSIVE if residual_ok else EXIT_FAILED
    else:
        code = _exit_for(verdict)
        if code == EXIT_OK and not residual_ok:
            code = EXIT_FAILED
    return code, report, lines


def cmd_symbol_dims(n_max: int) -> tuple[int, dict, list]:
    rows = []
    lines = [f"{'n':>2} {'dim g1':>7} {'dim g2':>7} {'dim K':>6}  chain  checks"]
    ok = True
    for n in range(1, n_max + 1):
        r = symbol_report(n)
        rows.append(r.as_dict())
        ok = ok and r.all_pass
        lines.append(f"{n:>2} {r.dim_g1:>7} {r.dim_g2:>7} {r.dim_cokernel:>6}  {tuple(r.restricted_chain)}  "
                     f"{'all-pass' if r.all_pass else 'FAIL'}")
    return (EXIT_OK if ok else EXIT_FAILED), {"command": "symbol-dims", "rows": rows}, lines


def parse_start(text: str, n: int) -> Point:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ProblemError(f"--start must be 2n+1 numbers 't,x1..xn,y1..yn', got {text!r}", "--start") from None
    if len(vals) != 2 * n + 1:
        raise ProblemError(f"--start needs {2 * n + 1} numbers for n={n}, got {len(vals)}", "--start")
    try:
        return Point.from_array(vals)
    except ValueError as exc:
        raise ProblemError(str(exc), "--start") from None


def cmd_geodesic(pf: ProblemFile, cfg: dict, start: Point) -> tuple[int, dict, list, str]:
    S = pf.semispray()
    tr = integrate_geodesic(S, start, float(cfg["step"]), int(cfg["steps"]))
    last = tr.point(len(tr) - 1)
    report = {
        "command": "geodesic",
        "n": S.n,
        "samples": len(tr),
        "step": tr.h,
        "truncated": tr.truncated,
        "message": tr.message,
        "consistency_residual": tr.consistency_residual(),
        "consistent": tr.is_consistent(),
        "final": {"t": last.t, "x": list(last.x), "y": list(last.y)},
    }
    lines = [f"RK4 h={tr.h!r} samples={len(tr)} truncated={str(tr.truncated).lower()}",
             f"final point {last}", f"consistency residual {tr.consistency_residual():.3e}"]
    if tr.truncated:
        lines.append(f"domain error: {tr.message}")
    return (EXIT_FAILED if tr.truncated else EXIT_OK), report, lines, tr.export()


# ---------------------------------------------------------------------------


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-out", metavar="PATH", help="write the machine-readable report here")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--samples", type=int, help="sample points for the zero test")
    common.add_argument("--tol", type=float, help="zero-test tolerance")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    with_file = argparse.ArgumentParser(add_help=False)
    with_file.add_argument("--file", required=True, help="JSON problem file")

    integ = argparse.ArgumentParser(add_help=False)
    integ.add_argument("--step", type=float, help="RK4 step h")
    integ.add_argument("--steps", type=int, help="number of RK4 steps")

    parser = argparse.ArgumentParser(prog="sodevar", description="Inverse problem tools for second-order ODE systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common, with_file, integ], help="connection, curvature and classification")
    sub.add_parser("check-theta", parents=[common, with_file, integ], help="test a candidate 1-form theta")
    sub.add_parser("check-lagrangian", parents=[common, with_file, integ], help="verify a Lagrangian")
    sd = sub.add_parser("symbol-dims", parents=[common], help="exact symbol dimensions for n = 1..n-max")
    sd.add_argument("--n-max", type=int, default=6)
    geo = sub.add_parser("geodesic", parents=[common, with_file, integ], help="integrate a geodesic with RK4")
    geo.add_argument("--start", required=True, help="t,x1,..,xn,y1,..,yn")
    geo.add_argument("--out", metavar="PATH", help="trajectory file (default: stdout)")
    return parser


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv: list | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for failed checks
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    for attr in ("step", "steps"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    t0 = time.perf_counter()
    try:
        if args.command == "symbol-dims":
            if args.n_max < 1:
                raise ProblemError("--n-max must be at least 1", "--n-max")
            cfg = None
            code, report, lines = cmd_symbol_dims(args.n_max)
            traj = None
        else:
            try:
                with open(args.file, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ProblemError(f"cannot read problem file: {exc.strerror}", "--file") from None
            pf = load_problem(text)
            cfg = resolve_config(pf, args)
            traj = None
            if args.command == "analyze":
                code, report, lines = cmd_analyze(pf, cfg)
            elif args.command == "check-theta":
                code, report, lines = cmd_check_theta(pf, cfg)
            elif args.command == "check-lagrangian":
                code, report, lines = cmd_check_lagrangian(pf, cfg)
            else:
                start = parse_start(args.start, pf.n)
                code, report, lines, traj = cmd_geodesic(pf, cfg, start)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.json_out:
            _write(args.json_out, dump_report({"command": args.command, "error": exc.as_dict()}))
        return EXIT_ERROR
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        if args.json_out:
            _write(args.json_out, dump_report({"command": args.command, "inconclusive": str(exc)}))
        return EXIT_INCONCLUSIVE

    if cfg is not None:
        report["config"] = cfg
    report["exit_code"] = code
    if args.timings:
        report["timings"] = {"total_seconds": time.perf_counter() - t0}
    print("\n".join(lines))
    if traj is not None:
        if getattr(args, "out", None):
            _write(args.out, traj)
        else:
            sys.stdout.write(traj)
    if args.json_out:
        _write(args.json_out, dump_report(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
