"""Immutable expression trees over the jet coordinates (t, x1..xn, y1..yn).

Every node is hashable and compares structurally.  Arithmetic goes through a
sum-of-monomials normal form: a canonical expression is a flat sum of
rational multiples of monomials whose factors ("atoms") are variables,
unary functions, or sums that could not be expanded because they sit in a
denominator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

Number = Union[int, Fraction]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
MAX_EXPONENT = 256

_KIND_RANK = {"T": 0, "X": 1, "Y": 2}


class DomainError(ArithmeticError):
    """Raised when an expression cannot be evaluated (or built) at a point."""


@dataclass(frozen=True, order=True)
class VarId:
    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "T" and self.index != 0:
            raise ValueError("t carries no index")
        if self.kind != "T" and self.index < 1:
            raise ValueError(f"{self.kind.lower()}-variables are indexed from 1")

    @classmethod
    def t(cls) -> "VarId":
        return cls("T", 0)

    @classmethod
    def x(cls, i: int) -> "VarId":
        return cls("X", i)

    @classmethod
    def y(cls, i: int) -> "VarId":
        return cls("Y", i)

    def __str__(self):
        return "t" if self.kind == "T" else f"{self.kind.lower()}{self.index}"

    @property
    def sort_key(self):
        return (_KIND_RANK[self.kind], self.index)


T = VarId.t()


# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ("_hash", "_key", "_sum", "_free")

    def _init(self, fields):
        self._hash = hash((type(self).__name__,) + fields)
        self._key = None
        self._sum = None
        self._free = None

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        return not self == other

    def _fields(self):
        raise NotImplementedError

    @property
    def key(self):
        """Total, run-independent ordering key."""
        if self._key is None:
            self._key = self._make_key()
        return self._key

    def _make_key(self):
        raise NotImplementedError

    def children(self) -> tuple["Expr", ...]:
        return ()

    # arithmetic always returns simplified expressions
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("only integer exponents are supported")
        return power(self, k)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"{type(self).__name__}<{to_text(self)}>"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        self.value = Fraction(value)
        self._init((self.value,))

    def _fields(self):
        return (self.value,)

    def _make_key(self):
        return (0, self.value)


class Var(Expr):
    __slots__ = ("var",)

    def __init__(self, var: VarId):
        self.var = var
        self._init((var,))

    def _fields(self):
        return (self.var,)

    def _make_key(self):
        return (1,) + self.var.sort_key


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg
        self._init((name, arg))

    def _fields(self):
        return (self.name, self.arg)

    def _make_key(self):
        return (2, FUNCTIONS.index(self.name), self.arg.key)

    def children(self):
        return (self.arg,)


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Expr]):
        self.args = tuple(args)
        self._init(self.args)

    def _fields(self):
        return self.args

    def _make_key(self):
        return (3, tuple(a.key for a in self.args))

    def children(self):
        return self.args


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Expr]):
        self.args = tuple(args)
        self._init(self.args)

    def _fields(self):
        return self.args

    def _make_key(self):
        return (4, tuple(a.key for a in self.args))

    def children(self):
        return self.args


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        if abs(exp) > MAX_EXPONENT:
            raise ValueError(f"exponent {exp} exceeds the supported bound {MAX_EXPONENT}")
        self.base = base
        self.exp = int(exp)
        self._init((base, self.exp))

    def _fields(self):
        return (self.base, self.exp)

    def _make_key(self):
        return (5, self.base.key, self.exp)

    def children(self):
        return (self.base,)


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        self.num = num
        self.den = den
        self._init((num, den))

    def _fields(self):
        return (self.num, self.den)

    def _make_key(self):
        return (6, self.num.key, self.den.key)

    def children(self):
        return (self.num, self.den)


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        self._init((arg,))

    def _fields(self):
        return (self.arg,)

    def _make_key(self):
        return (7, self.arg.key)

    def children(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, VarId):
        return Var(value)
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, float):
        return Const(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def free_vars(e: Expr) -> frozenset:
    if e._free is None:
        if isinstance(e, Var):
            e._free = frozenset((e.var,))
        else:
            acc = frozenset()
            for c in e.children():
                acc |= free_vars(c)
            e._free = acc
    return e._free


def max_index(e: Expr) -> int:
    return max((v.index for v in free_vars(e)), default=0)


# ---------------------------------------------------------------------------
# normal form: dict {monomial: Fraction}; monomial = sorted tuple of (atom, exp)


def _sorted_mono(items) -> tuple:
    return tuple(sorted(items, key=lambda ak: ak[0].key))


def _mono_key(mono):
    return (len(mono) == 0, tuple((a.key, k) for a, k in mono))


def _add_into(acc: dict, d: dict, scale: Fraction = Fraction(1)) -> None:
    for m, c in d.items():
        v = acc.get(m, 0) + c * scale
        if v:
            acc[m] = v
        else:
            acc.pop(m, None)


def _scale(d: dict, c) -> dict:
    if not c:
        return {}
    return {m: v * c for m, v in d.items()}


def _needs_rewrite(mono) -> bool:
    n_exp = 0
    for a, k in mono:
        if isinstance(a, Func):
            if a.name == "exp":
                n_exp += 1
                if k != 1 or n_exp > 1:
                    return True
            elif a.name == "sqrt" and abs(k) >= 2:
                return True
    return False


def _rewrite_mono(mono) -> dict:
    """Fold exp factors together and reduce even powers of square roots."""
    rest = []
    exp_arg: dict = {}
    extra = []
    for a, k in mono:
        if isinstance(a, Func) and a.name == "exp":
            _add_into(exp_arg, to_sum(a.arg), Fraction(k))
        elif isinstance(a, Func) and a.name == "sqrt" and abs(k) >= 2:
            q, r = divmod(abs(k), 2)
            sign = 1 if k > 0 else -1
            inner = to_sum(a.arg)
            extra.append(_pow_sum(inner, sign * q))
            if r:
                rest.append((a, sign))
        else:
            rest.append((a, k))
    out = {_sorted_mono(rest): Fraction(1)}
    if exp_arg:
        out = _mul_sums(out, to_sum(_func("exp", from_sum(exp_arg))))
    for d in extra:
        out = _mul_sums(out, d)
    return out


@lru_cache(maxsize=200_000)
def _mono_mul(ma: tuple, mb: tuple) -> dict:
    if not ma:
        merged = mb
    elif not mb:
        merged = ma
    else:
        acc = dict(ma)
        for a, k in mb:
            acc[a] = acc.get(a, 0) + k
        merged = _sorted_mono((a, k) for a, k in acc.items() if k)
    if _needs_rewrite(merged):
        return _rewrite_mono(merged)
    return {merged: Fraction(1)}


def _mul_sums(a: dict, b: dict) -> dict:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    acc: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            prod = _mono_mul(ma, mb)
            c = ca * cb
            if len(prod) == 1:
                ((m, v),) = prod.items()
                w = acc.get(m, 0) + c * v
                if w:
                    acc[m] = w
                else:
                    acc.pop(m, None)
            else:
                _add_into(acc, prod, c)
    return acc


def _inv_sum(d: dict) -> dict:
    if not d:
        raise DomainError("division by zero")
    if len(d) == 1:
        ((m, c),) = d.items()
        inv_m = tuple((a, -k) for a, k in m)
        if _needs_rewrite(inv_m):
            return _scale(_rewrite_mono(inv_m), 1 / c)
        return {inv_m: 1 / c}
    lead = min(d, key=_mono_key)
    c0 = d[lead]
    atom = from_sum(_scale(d, 1 / c0))
    return {((atom, -1),): 1 / c0}


def _pow_sum(d: dict, k: int) -> dict:
    if k == 0:
        return {(): Fraction(1)}
    if k < 0:
        # keep a power of a sum in the denominator rather than expanding it
        return _pow_sum(_inv_sum(d), -k) if len(d) == 1 else _inv_pow_sum(d, -k)
    if not d:
        return {}
    if len(d) == 1:
        ((m, c),) = d.items()
        mono = tuple((a, e * k) for a, e in m)
        if _needs_rewrite(mono):
            return _scale(_rewrite_mono(mono), c**k)
        return {mono: c**k}
    result = {(): Fraction(1)}
    base = d
    while k:
        if k & 1:
            result = _mul_sums(result, base)
        k >>= 1
        if k:
            base = _mul_sums(base, base)
    return result


def _inv_pow_sum(d: dict, k: int) -> dict:
    lead = min(d, key=_mono_key)
    c0 = d[lead]
    atom = from_sum(_scale(d, 1 / c0))
    return {((atom, -k),): c0 ** (-k)}


def _leading_coefficient(d: dict) -> Fraction:
    return d[min(d, key=_mono_key)]


def _func(name: str, arg: Expr) -> Expr:
    """Build name(arg) for a canonical argument, applying exact identities."""
    d = to_sum(arg)
    if name == "sin":
        if not d:
            return ZERO
        if _leading_coefficient(d) < 0:
            return neg(Func("sin", from_sum(_scale(d, -1))))
    elif name == "cos":
        if not d:
            return ONE
        if _leading_coefficient(d) < 0:
            return Func("cos", from_sum(_scale(d, -1)))
    elif name == "exp":
        if not d:
            return ONE
        if isinstance(arg, Func) and arg.name == "ln":
            return arg.arg
    elif name == "ln":
        if d == {(): Fraction(1)}:
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
    elif name == "sqrt":
        if not d:
            return ZERO
        if isinstance(arg, Const) and arg.value > 0:
            p, q = arg.value.numerator, arg.value.denominator
            rp, rq = _isqrt_exact(p), _isqrt_exact(q)
            if rp is not None and rq is not None:
                return Const(Fraction(rp, rq))
    return Func(name, arg)


def _isqrt_exact(m: int):
    import math

    r = math.isqrt(m)
    return r if r * r == m else None


def _inv_tree(e: Expr) -> dict:
    """1/e, inverting the factors of a product separately so that a printed
    denominator (A)*(B) is read back as A^-1 * B^-1 rather than expanded."""
    if isinstance(e, Mul):
        d = {(): Fraction(1)}
        for a in e.args:
            d = _mul_sums(d, _inv_tree(a))
        return d
    if isinstance(e, Neg):
        return _scale(_inv_tree(e.arg), -1)
    if isinstance(e, Pow):
        return _pow_sum(to_sum(e.base), -e.exp)
    if isinstance(e, Div):
        return _mul_sums(to_sum(e.den), _inv_tree(e.num))
    return _inv_sum(to_sum(e))


def to_sum(e: Expr) -> dict:
    """Normal form of ``e``.  The returned dict must not be mutated."""
    if e._sum is not None:
        return e._sum
    if isinstance(e, Const):
        d = {(): e.value} if e.value else {}
    elif isinstance(e, Var):
        d = {((e, 1),): Fraction(1)}
    elif isinstance(e, Func):
        f = _func(e.name, from_sum(to_sum(e.arg)))
        d = {((f, 1),): Fraction(1)} if isinstance(f, Func) else to_sum(f)
    elif isinstance(e, Add):
        d = {}
        for a in e.args:
            _add_into(d, to_sum(a))
    elif isinstance(e, Mul):
        d = {(): Fraction(1)}
        for a in e.args:
            d = _mul_sums(d, to_sum(a))
    elif isinstance(e, Neg):
        d = _scale(to_sum(e.arg), -1)
    elif isinstance(e, Div):
        d = _mul_sums(to_sum(e.num), _inv_tree(e.den))
    elif isinstance(e, Pow):
        d = _pow_sum(to_sum(e.base), e.exp)
    else:
        raise TypeError(f"unexpected node {type(e).__name__}")
    e._sum = d
    return d


def _term(mono, c) -> Expr:
    factors = [a if k == 1 else Pow(a, k) for a, k in mono]
    if not factors:
        return Const(c)
    if c == 1:
        return factors[0] if len(factors) == 1 else Mul(factors)
    return Mul([Const(c)] + factors)


def from_sum(d: dict) -> Expr:
    items = sorted(d.items(), key=lambda mc: _mono_key(mc[0]))
    terms = [_term(m, c) for m, c in items]
    if not terms:
        out = ZERO
    elif len(terms) == 1:
        out = terms[0]
    else:
        out = Add(terms)
    if out._sum is None:
        out._sum = d
    return out


def terms_of(e: Expr) -> tuple:
    """Top-level summands of the canonical form of ``e``."""
    s = simplify(e)
    return s.args if isinstance(s, Add) else (s,)


# ---------------------------------------------------------------------------
# public algebra


def simplify(e: Expr) -> Expr:
    """Canonical form: constants folded, identities removed, like terms collected."""
    return from_sum(to_sum(as_expr(e)))


def add(*es) -> Expr:
    acc: dict = {}
    for e in es:
        _add_into(acc, to_sum(as_expr(e)))
    return from_sum(acc)


def sub(a, b) -> Expr:
    acc = dict(to_sum(as_expr(a)))
    _add_into(acc, to_sum(as_expr(b)), Fraction(-1))
    return from_sum(acc)


def mul(*es) -> Expr:
    d = {(): Fraction(1)}
    for e in es:
        d = _mul_sums(d, to_sum(as_expr(e)))
    return from_sum(d)


def div(a, b) -> Expr:
    return from_sum(_mul_sums(to_sum(as_expr(a)), _inv_sum(to_sum(as_expr(b)))))


def neg(a) -> Expr:
    return from_sum(_scale(to_sum(as_expr(a)), -1))


def power(a, k: int) -> Expr:
    if abs(k) > MAX_EXPONENT:
        raise ValueError(f"exponent {k} exceeds the supported bound {MAX_EXPONENT}")
    return from_sum(_pow_sum(to_sum(as_expr(a)), k))


def func(name: str, a) -> Expr:
    return _func(name, simplify(as_expr(a)))


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def exp(a) -> Expr:
    return func("exp", a)


def ln(a) -> Expr:
    return func("ln", a)


def sqrt(a) -> Expr:
    return func("sqrt", a)


def is_identically_zero(e: Expr) -> bool:
    """Exact (structural) zero test; ``is_zero`` is the sampling test."""
    return not to_sum(as_expr(e))


def as_rational(e: Expr):
    """The rational value of a constant expression, else None."""
    d = to_sum(as_expr(e))
    if not d:
        return Fraction(0)
    if len(d) == 1 and () in d:
        return d[()]
    return None


# ---------------------------------------------------------------------------
# differentiation


def _diff_func(a: Func, v: VarId) -> dict:
    darg = _diff_sum(to_sum(a.arg), v)
    if not darg:
        return {}
    arg = a.arg
    if a.name == "sin":
        outer = to_sum(_func("cos", arg))
    elif a.name == "cos":
        outer = _scale(to_sum(_func("sin", arg)), -1)
    elif a.name == "exp":
        outer = {((a, 1),): Fraction(1)}
    elif a.name == "ln":
        outer = _inv_sum(to_sum(arg))
    else:  # sqrt
        outer = {((a, -1),): Fraction(1, 2)}
    return _mul_sums(outer, darg)


@lru_cache(maxsize=200_000)
def _diff_atom(a: Expr, v: VarId) -> dict:
    if v not in free_vars(a):
        return {}
    if isinstance(a, Var):
        return {(): Fraction(1)}
    if isinstance(a, Func):
        return _diff_func(a, v)
    return _diff_sum(to_sum(a), v)


def _diff_sum(d: dict, v: VarId) -> dict:
    acc: dict = {}
    for m, c in d.items():
        for idx, (a, k) in enumerate(m):
            da = _diff_atom(a, v)
            if not da:
                continue
            if k == 1:
                rest = m[:idx] + m[idx + 1 :]
            else:
                rest = m[:idx] + ((a, k - 1),) + m[idx + 1 :]
            _add_into(acc, _mul_sums({rest: c * k}, da))
    return acc


def diff(e: Expr, v: VarId) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``v``, simplified."""
    e = as_expr(e)
    if v not in free_vars(e):
        return ZERO
    return from_sum(_diff_sum(to_sum(e), v))


# ---------------------------------------------------------------------------
# printing (output re-parses to an equal expression up to simplify)

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _const_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    if isinstance(e, Const):
        if e.value < 0:
            return _PREC_NEG
        return _PREC_MUL if e.value.denominator != 1 else _PREC_ATOM
    return _PREC_ATOM


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < min_prec else s


def _split_factor(f: Expr):
    """(base, exponent) for a factor appearing in a product."""
    if isinstance(f, Pow):
        return f.base, f.exp
    return f, 1


def _power_text(base: Expr, k: int) -> str:
    if k == 1:
        return _wrap(base, _PREC_MUL + 1) if isinstance(base, Const) else _wrap(base, _PREC_POW)
    return f"{_wrap(base, _PREC_ATOM)}^{k}"


def _product_text(coeff: Fraction, factors) -> str:
    """Text of |coeff| * factors with negative powers moved to a denominator."""
    num, den = [], []
    for f in factors:
        base, k = _split_factor(f)
        (num if k > 0 else den).append(_power_text(base, abs(k)))
    c = abs(coeff)
    if c.numerator != 1 or not num:
        num.insert(0, str(c.numerator))
    if c.denominator != 1:
        den.insert(0, str(c.denominator))
    s = "*".join(num)
    if den:
        s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
    return s


def _canonical_term(t: Expr):
    """(coefficient, factors) if ``t`` is a canonical product term, else None."""
    if isinstance(t, Const):
        return t.value, []
    if isinstance(t, Mul):
        args = list(t.args)
        c = Fraction(1)
        if args and isinstance(args[0], Const):
            c = args.pop(0).value
        if all(not isinstance(a, (Const, Mul, Add, Neg, Div)) for a in args):
            return c, args
        return None
    if isinstance(t, (Var, Func)):
        return Fraction(1), [t]
    if isinstance(t, Pow) and not isinstance(t.base, Const):
        return Fraction(1), [t]
    return None


def _signed_term_text(t: Expr, first: bool) -> str:
    ct = _canonical_term(t)
    if ct is None:
        s = _wrap(t, _PREC_ADD + 1)
        return s if first else f" + {s}"
    c, factors = ct
    body = _product_text(c, factors)
    if c >= 0:
        return body if first else f" + {body}"
    if not first:
        return f" - {body}"
    # unary minus binds tighter than ^, so guard a leading power
    if factors and abs(c) == 1 and "^" in body.split("*")[0].split("/")[0]:
        return f"-({body})"
    return f"-{body}"


def to_text(e: Expr) -> str:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return str(e.var)
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Add):
        return "".join(_signed_term_text(t, i == 0) for i, t in enumerate(e.args))
    if isinstance(e, (Mul, Pow)):
        ct = _canonical_term(e)
        if ct is not None:
            return _signed_term_text(e, True)
        if isinstance(e, Pow):
            return f"{_wrap(e.base, _PREC_ATOM)}^{e.exp}" if e.exp >= 0 else f"{_wrap(e.base, _PREC_ATOM)}^({e.exp})"
        parts = [_wrap(a, _PREC_MUL + 1) if i else _wrap(a, _PREC_MUL) for i, a in enumerate(e.args)]
        return "*".join(parts)
    if isinstance(e, Div):
        return f"{_wrap(e.num, _PREC_MUL)}/{_wrap(e.den, _PREC_MUL + 1)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, _PREC_ATOM)}"
    raise TypeError(f"unexpected node {type(e).__name__}")
