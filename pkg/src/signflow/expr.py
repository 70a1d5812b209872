"""Expression trees for autonomous vector fields.

Nodes are immutable and compare structurally, so simplified derivatives can
be tested for literal zero with ``==``.  The algebra is deliberately small:
arithmetic, integer powers and a fixed set of scalar functions.  Variables
are positional (``Var(1)`` is the first coordinate).

Unary minus binds tighter than ``^``, so ``-x1^2`` denotes ``(-x1)^2``.
The pretty printer inserts parentheses so that ``parse(pretty(e)) == e``
for any tree produced by :func:`simplify` or the parser itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Param",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Neg",
    "Pow",
    "Fun",
    "FUNCTIONS",
    "EvalDomainError",
    "eval_expr",
    "free_vars",
    "substitute",
    "simplify",
    "differentiate",
    "pretty",
    "const_value",
    "format_number",
]


class EvalDomainError(ArithmeticError):
    """Raised when a point evaluation leaves a function's domain."""


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()

    def __add__(self, other: "Expr") -> "Expr":
        return Add(self, _coerce(other))

    def __radd__(self, other) -> "Expr":
        return Add(_coerce(other), self)

    def __sub__(self, other) -> "Expr":
        return Sub(self, _coerce(other))

    def __rsub__(self, other) -> "Expr":
        return Sub(_coerce(other), self)

    def __mul__(self, other) -> "Expr":
        return Mul(self, _coerce(other))

    def __rmul__(self, other) -> "Expr":
        return Mul(_coerce(other), self)

    def __truediv__(self, other) -> "Expr":
        return Div(self, _coerce(other))

    def __rtruediv__(self, other) -> "Expr":
        return Div(_coerce(other), self)

    def __neg__(self) -> "Expr":
        return Neg(self)

    def __pow__(self, k: int) -> "Expr":
        return Pow(self, int(k))

    def __str__(self) -> str:
        return pretty(self)


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return Num(float(v))
    raise TypeError(f"cannot coerce {v!r} to Expr")


@dataclass(frozen=True, slots=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int  # 1-based coordinate index


@dataclass(frozen=True, slots=True)
class Param(Expr):
    """Named constant; only appears transiently during parsing."""

    name: str


@dataclass(frozen=True, slots=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Div(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int  # integer exponents only


@dataclass(frozen=True, slots=True)
class Fun(Expr):
    name: str
    arg: Expr


def _sigmoid(x: float) -> float:
    # 1 / (1 + exp(-x)) with overflow guarded toward the saturated value.
    try:
        e = math.exp(-x)
    except OverflowError:
        return 0.0
    return 1.0 / (1.0 + e)


def _checked_log(x: float) -> float:
    if x <= 0.0:
        raise EvalDomainError(f"log of non-positive value {x!r}")
    return math.log(x)


def _checked_sqrt(x: float) -> float:
    if x < 0.0:
        raise EvalDomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


FUNCTIONS: Mapping[str, Callable[[float], float]] = {
    "exp": _safe_exp,
    "log": _checked_log,
    "tanh": math.tanh,
    "sigmoid": _sigmoid,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": _checked_sqrt,
}


def eval_expr(e: Expr, x) -> float:
    """Evaluate ``e`` at the point ``x`` (sequence indexed from coordinate 1).

    Raises :class:`EvalDomainError` for log/sqrt domain violations and for
    division by exactly zero.  Overflow produces ``inf`` rather than an error.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(x[e.index - 1])
    if isinstance(e, Add):
        return eval_expr(e.lhs, x) + eval_expr(e.rhs, x)
    if isinstance(e, Sub):
        return eval_expr(e.lhs, x) - eval_expr(e.rhs, x)
    if isinstance(e, Mul):
        return eval_expr(e.lhs, x) * eval_expr(e.rhs, x)
    if isinstance(e, Div):
        d = eval_expr(e.rhs, x)
        if d == 0.0:
            raise EvalDomainError("division by zero")
        return eval_expr(e.lhs, x) / d
    if isinstance(e, Neg):
        return -eval_expr(e.arg, x)
    if isinstance(e, Pow):
        return _powi(eval_expr(e.base, x), e.exponent)
    if isinstance(e, Fun):
        return FUNCTIONS[e.name](eval_expr(e.arg, x))
    if isinstance(e, Param):
        raise ValueError(f"unsubstituted parameter {e.name!r}")
    raise TypeError(f"not an Expr: {e!r}")


def _powi(base: float, k: int) -> float:
    if k == 0:
        return 1.0
    if k < 0:
        if base == 0.0:
            raise EvalDomainError("zero raised to a negative power")
        return 1.0 / _powi(base, -k)
    acc = 1.0
    b = base
    n = k
    while n:
        if n & 1:
            acc *= b
        b *= b
        n >>= 1
    return acc


def free_vars(e: Expr) -> set[int]:
    """Set of coordinate indices referenced by ``e``."""
    out: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.lhs)
            stack.append(node.rhs)
        elif isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Fun):
            stack.append(node.arg)
    return out


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace ``Var(i)`` with ``mapping[i]`` where present (no simplification)."""
    if isinstance(e, Var):
        return mapping.get(e.index, e)
    if isinstance(e, (Num, Param)):
        return e
    if isinstance(e, Add):
        return Add(substitute(e.lhs, mapping), substitute(e.rhs, mapping))
    if isinstance(e, Sub):
        return Sub(substitute(e.lhs, mapping), substitute(e.rhs, mapping))
    if isinstance(e, Mul):
        return Mul(substitute(e.lhs, mapping), substitute(e.rhs, mapping))
    if isinstance(e, Div):
        return Div(substitute(e.lhs, mapping), substitute(e.rhs, mapping))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Fun):
        return Fun(e.name, substitute(e.arg, mapping))
    raise TypeError(f"not an Expr: {e!r}")


ZERO = Num(0.0)
ONE = Num(1.0)


def _is_num(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


def simplify(e: Expr) -> Expr:
    """Bottom-up constant folding plus annihilation/identity rules.

    The rule set is intentionally minimal: enough to turn structurally
    vanishing derivatives into the literal 0 while remaining predictable.
    Constant subtrees whose folding would leave a function's domain are
    kept unevaluated.
    """
    if isinstance(e, (Num, Var, Param)):
        if isinstance(e, Num) and e.value == 0.0:
            return ZERO  # normalises -0.0
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        if isinstance(a, Num):
            return Num(-a.value) if a.value != 0.0 else ZERO
        if isinstance(a, Neg):
            return a.arg
        if isinstance(a, Add):
            return simplify(Sub(Neg(a.lhs), a.rhs))
        if isinstance(a, Sub):
            return simplify(Sub(a.rhs, a.lhs))
        return Neg(a)
    if isinstance(e, Fun):
        a = simplify(e.arg)
        if isinstance(a, Num):
            try:
                return Num(FUNCTIONS[e.name](a.value))
            except EvalDomainError:
                pass
        return Fun(e.name, a)
    if isinstance(e, Pow):
        b = simplify(e.base)
        if e.exponent == 0:
            return ONE
        if e.exponent == 1:
            return b
        if isinstance(b, Num):
            try:
                return Num(_powi(b.value, e.exponent))
            except EvalDomainError:
                pass
        return Pow(b, e.exponent)

    l = simplify(e.lhs)
    r = simplify(e.rhs)
    if isinstance(e, Add):
        if _is_num(l, 0.0):
            return r
        if _is_num(r, 0.0):
            return l
        if isinstance(l, Num) and isinstance(r, Num):
            return Num(l.value + r.value)
        if isinstance(r, Neg):
            return Sub(l, r.arg)
        return Add(l, r)
    if isinstance(e, Sub):
        if _is_num(r, 0.0):
            return l
        if _is_num(l, 0.0):
            return simplify(Neg(r))
        if isinstance(l, Num) and isinstance(r, Num):
            return Num(l.value - r.value)
        if isinstance(r, Neg):
            return Add(l, r.arg)
        return Sub(l, r)
    if isinstance(e, Mul):
        if _is_num(l, 0.0) or _is_num(r, 0.0):
            return ZERO
        if _is_num(l, 1.0):
            return r
        if _is_num(r, 1.0):
            return l
        if isinstance(l, Num) and isinstance(r, Num):
            return Num(l.value * r.value)
        return Mul(l, r)
    if isinstance(e, Div):
        if _is_num(l, 0.0) and not _is_num(r, 0.0):
            return ZERO
        if _is_num(r, 1.0):
            return l
        if isinstance(l, Num) and isinstance(r, Num) and r.value != 0.0:
            return Num(l.value / r.value)
        return Div(l, r)
    raise TypeError(f"not an Expr: {e!r}")


def const_value(e: Expr) -> float | None:
    """Value of a constant expression, or None if it references variables."""
    s = simplify(e)
    return s.value if isinstance(s, Num) else None


def differentiate(e: Expr, j: int) -> Expr:
    """Symbolic partial derivative with respect to coordinate ``j``, simplified."""
    return simplify(_diff(e, j))


def _diff(e: Expr, j: int) -> Expr:
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == j else ZERO
    if isinstance(e, Add):
        return Add(_diff(e.lhs, j), _diff(e.rhs, j))
    if isinstance(e, Sub):
        return Sub(_diff(e.lhs, j), _diff(e.rhs, j))
    if isinstance(e, Mul):
        return Add(Mul(_diff(e.lhs, j), e.rhs), Mul(e.lhs, _diff(e.rhs, j)))
    if isinstance(e, Div):
        num = Sub(Mul(_diff(e.lhs, j), e.rhs), Mul(e.lhs, _diff(e.rhs, j)))
        return Div(num, Pow(e.rhs, 2))
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, j))
    if isinstance(e, Pow):
        du = _diff(e.base, j)
        return Mul(Mul(Num(float(e.exponent)), Pow(e.base, e.exponent - 1)), du)
    if isinstance(e, Fun):
        u, du = e.arg, _diff(e.arg, j)
        if e.name == "exp":
            return Mul(Fun("exp", u), du)
        if e.name == "log":
            return Div(du, u)
        if e.name == "tanh":
            return Mul(Sub(ONE, Pow(Fun("tanh", u), 2)), du)
        if e.name == "sigmoid":
            s = Fun("sigmoid", u)
            return Mul(Mul(s, Sub(ONE, s)), du)
        if e.name == "sin":
            return Mul(Fun("cos", u), du)
        if e.name == "cos":
            return Mul(Neg(Fun("sin", u)), du)
        if e.name == "sqrt":
            return Div(du, Mul(Num(2.0), Fun("sqrt", u)))
        raise ValueError(f"unknown function {e.name!r}")
    if isinstance(e, Param):
        raise ValueError(f"unsubstituted parameter {e.name!r}")
    raise TypeError(f"not an Expr: {e!r}")


def format_number(v: float) -> str:
    """Literal form used by the pretty printer (shortest round-trip)."""
    if v != v or v in (math.inf, -math.inf):
        raise ValueError(f"non-finite literal {v!r}")
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


# Precedence levels: looser binds lower.  Unary minus binds tighter than ^.
_P_ADD = 1
_P_MUL = 2
_P_POW = 3
_P_NEG = 4
_P_ATOM = 5


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _P_ADD
    if isinstance(e, (Mul, Div)):
        return _P_MUL
    if isinstance(e, Pow):
        return _P_POW
    if isinstance(e, Neg):
        return _P_NEG
    if isinstance(e, Num) and (e.value < 0.0 or math.copysign(1.0, e.value) < 0):
        return _P_NEG
    return _P_ATOM


def pretty(e: Expr, _ctx: int = 0) -> str:
    s = _render(e)
    if _prec(e) < _ctx:
        return f"({s})"
    return s


def _render(e: Expr) -> str:
    if isinstance(e, Num):
        if e.value < 0.0 or math.copysign(1.0, e.value) < 0:
            return "-" + format_number(-e.value)
        return format_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Add):
        return f"{pretty(e.lhs, _P_ADD)} + {pretty(e.rhs, _P_ADD + 1)}"
    if isinstance(e, Sub):
        return f"{pretty(e.lhs, _P_ADD)} - {pretty(e.rhs, _P_ADD + 1)}"
    if isinstance(e, Mul):
        return f"{pretty(e.lhs, _P_MUL)}*{pretty(e.rhs, _P_MUL + 1)}"
    if isinstance(e, Div):
        return f"{pretty(e.lhs, _P_MUL)}/{pretty(e.rhs, _P_MUL + 1)}"
    if isinstance(e, Neg):
        return "-" + pretty(e.arg, _P_NEG)
    if isinstance(e, Pow):
        k = e.exponent
        ks = str(k) if k >= 0 else f"({k})"
        return f"{pretty(e.base, _P_NEG)}^{ks}"
    if isinstance(e, Fun):
        return f"{e.name}({pretty(e.arg)})"
    raise TypeError(f"not an Expr: {e!r}")
