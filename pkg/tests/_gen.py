"""Seeded random expression generator shared by the property and oracle tests."""

from __future__ import annotations

import random


def variables(n: int) -> list:
    return ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]


def random_expression(rng: random.Random, n: int, depth: int, trig: bool = True) -> str:
    """DSL text for a polynomial/trig expression of nesting depth <= depth.

    Domain-sensitive functions are wrapped so that the default box stays inside
    their domain: ln and sqrt see 2 + sin(.), quotients divide by 2 + cos(.).
    """
    if depth <= 0 or rng.random() < 0.2:
        if rng.random() < 0.3:
            return str(rng.randint(1, 5)) if rng.random() < 0.7 else f"{rng.randint(1, 5)}/{rng.randint(2, 4)}"
        return rng.choice(variables(n))
    sub = lambda: random_expression(rng, n, depth - 1, trig)  # noqa: E731
    ops = ["+", "-", "*", "^"]
    if trig:
        ops += ["sin", "cos", "exp", "ln", "sqrt", "/"]
    op = rng.choice(ops)
    if op in "+-*":
        return f"({sub()}) {op} ({sub()})"
    if op == "^":
        return f"({sub()})^{rng.randint(2, 3)}"
    if op == "/":
        return f"({sub()}) / (2 + cos({sub()}))"
    if op in ("ln", "sqrt"):
        return f"{op}(2 + sin({sub()}))"
    if op == "exp":
        return f"exp(sin({sub()}))"
    return f"{op}({sub()})"


def random_polynomial(rng: random.Random, n: int, terms: int = 3, degree: int = 3) -> str:
    out = []
    names = variables(n)
    for _ in range(terms):
        c = rng.randint(-3, 3) or 1
        mono = "*".join(rng.choice(names) for _ in range(rng.randint(0, degree))) or "1"
        out.append(f"{c}*{mono}")
    return " + ".join(out)
