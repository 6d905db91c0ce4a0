from .core import (
    FUNCTIONS,
    ONE,
    T,
    ZERO,
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
    VarId,
    add,
    as_expr,
    as_rational,
    cos,
    diff,
    div,
    exp,
    free_vars,
    is_identically_zero,
    ln,
    max_index,
    mul,
    neg,
    power,
    simplify,
    sin,
    sqrt,
    sub,
    terms_of,
    to_text,
)
from .evaluate import (
    InconclusiveError,
    Point,
    ZeroTestConfig,
    compile_terms_vector,
    eval_terms,
    eval_with_scale,
    evaluate,
    is_zero,
    sample_point,
    sample_points,
)
from .parser import IndexOutOfRangeError, ParseError, UnknownIdentifierError, parse, parse_raw


def t() -> Expr:
    return Var(VarId.t())


def x(i: int) -> Expr:
    return Var(VarId.x(i))


def y(i: int) -> Expr:
    return Var(VarId.y(i))


# ``eval`` is the operation name used in the documentation
eval = evaluate  # noqa: A001
