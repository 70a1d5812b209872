"""Line-oriented text format for systems.

Three statement kinds, one per line, with ``#`` comments::

    var x2 in [0, inf)
    param a = 1.5
    x1' = -a*x1 + tanh(x2)

Variables are ``x1, x2, ...``; every coordinate up to the largest index
mentioned must have exactly one equation.  Undeclared coordinates get the
default interval ``(-inf, inf)``.  Parameters are replaced by their
numeric values, so parsed systems contain only literals.  Exponents of
``^`` must fold to integer constants.

Operator precedence, loosest to tightest: ``+ -``, ``* /``, ``^``, unary
minus.  Unary minus binding tightest means ``-x1^2`` is ``(-x1)^2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .expr import (
    FUNCTIONS,
    Add,
    Div,
    Expr,
    Fun,
    Mul,
    Neg,
    Num,
    Pow,
    Sub,
    Var,
    const_value,
    format_number,
    free_vars,
    pretty,
)
from .system import UNBOUNDED, DomainBox, SystemDef, VarInterval

__all__ = ["ParseError", "parse_system", "emit_system"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", col {col}"
            where += ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num" | "ident" | one of the operator characters
    text: str
    col: int


_TOKEN_RE = re.compile(
    r"\s+|(?P<num>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()\[\],='])"
)

_VAR_RE = re.compile(r"^x([0-9]+)$")
_RESERVED = {"var", "param", "in", "inf"} | set(FUNCTIONS)


def _tokenize(text: str, line_no: int) -> list[_Tok]:
    out: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        if m.lastgroup == "num":
            out.append(_Tok("num", m.group(), m.start() + 1))
        elif m.lastgroup == "ident":
            out.append(_Tok("ident", m.group(), m.start() + 1))
        elif m.lastgroup == "op":
            out.append(_Tok(m.group(), m.group(), m.start() + 1))
        pos = m.end()
    return out


class _LineParser:
    """Recursive-descent parser over one statement's tokens."""

    def __init__(self, toks: list[_Tok], line_no: int, params: dict[str, float]):
        self.toks = toks
        self.line = line_no
        self.pos = 0
        self.params = params

    def error(self, message: str) -> ParseError:
        col = self.toks[self.pos].col if self.pos < len(self.toks) else (
            self.toks[-1].col + len(self.toks[-1].text) if self.toks else 1)
        return ParseError(message, self.line, col)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of line")
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t is None or t.kind != kind:
            raise self.error(f"expected {kind!r}")
        self.pos += 1
        return t

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    # Expression grammar, precedence climbing.  Levels: additive 10,
    # multiplicative 20, power 30 (right-assoc), unary minus 40.

    def parse_expr(self, min_bp: int = 0) -> Expr:
        left = self._parse_prefix()
        while True:
            t = self.peek()
            if t is None:
                break
            if t.kind in ("+", "-"):
                bp = 10
            elif t.kind in ("*", "/"):
                bp = 20
            elif t.kind == "^":
                bp = 30
            else:
                break
            if bp < min_bp:
                break
            self.pos += 1
            if t.kind == "^":
                rhs = self.parse_expr(bp - 1)  # right-associative
                left = self._make_pow(left, rhs)
            else:
                rhs = self.parse_expr(bp + 1)
                ctor = {"+": Add, "-": Sub, "*": Mul, "/": Div}[t.kind]
                left = ctor(left, rhs)
        return left

    def _make_pow(self, base: Expr, exponent: Expr) -> Expr:
        v = const_value(exponent)
        if v is None:
            raise self.error("exponent must be a constant")
        if not float(v).is_integer() or abs(v) > 2 ** 31 - 1:
            raise self.error(f"exponent must be an integer, got {v!r}")
        return Pow(base, int(v))

    def _parse_prefix(self) -> Expr:
        t = self.next()
        if t.kind == "-":
            inner = self.parse_expr(40)
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Neg(inner)
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "(":
            e = self.parse_expr(0)
            self.expect(")")
            return e
        if t.kind == "ident":
            name = t.text
            nxt = self.peek()
            if nxt is not None and nxt.kind == "(":
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function {name!r}", self.line, t.col)
                self.pos += 1
                arg = self.parse_expr(0)
                self.expect(")")
                return Fun(name, arg)
            m = _VAR_RE.match(name)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise ParseError("coordinate indices start at 1", self.line, t.col)
                return Var(idx)
            if name in self.params:
                return Num(self.params[name])
            raise ParseError(f"unknown identifier {name!r}", self.line, t.col)
        raise ParseError(f"unexpected token {t.text!r}", self.line, t.col)

    # Interval syntax: ("[" | "(") endpoint "," endpoint (")" | "]")

    def parse_interval(self) -> VarInterval:
        opener = self.next()
        if opener.kind not in ("[", "("):
            raise ParseError("expected '[' or '('", self.line, opener.col)
        lo, lo_inf = self._endpoint(left=True)
        self.expect(",")
        hi, hi_inf = self._endpoint(left=False)
        closer = self.next()
        if closer.kind not in ("]", ")"):
            raise ParseError("expected ')' or ']'", self.line, closer.col)
        lo_closed = opener.kind == "[" and not lo_inf
        hi_closed = closer.kind == "]" and not hi_inf
        if lo > hi:
            raise ParseError(f"empty interval [{lo}, {hi}]", self.line, opener.col)
        return VarInterval(lo, hi, lo_closed, hi_closed)

    def _endpoint(self, left: bool) -> tuple[float, bool]:
        t = self.next()
        negate = False
        if t.kind == "-":
            negate = True
            t = self.next()
        if t.kind == "ident" and t.text == "inf":
            if left and not negate:
                raise ParseError("left endpoint cannot be +inf", self.line, t.col)
            if not left and negate:
                raise ParseError("right endpoint cannot be -inf", self.line, t.col)
            return (-math.inf if negate else math.inf), True
        if t.kind == "num":
            v = float(t.text)
            return (-v if negate else v), False
        raise ParseError("expected a number or 'inf'", self.line, t.col)


def parse_system(text: str) -> SystemDef:
    """Parse DSL text into a system definition.

    Raises :class:`ParseError` with line/column positions on malformed
    input, duplicate or missing definitions, and unbound references.
    """
    lines = text.splitlines()
    statements: list[tuple[int, list[_Tok]]] = []
    for ln, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0]
        toks = _tokenize(body, ln)
        if toks:
            statements.append((ln, toks))

    # First pass: collect parameters so equations can use them regardless
    # of declaration order.
    params: dict[str, float] = {}
    for ln, toks in statements:
        if toks[0].kind == "ident" and toks[0].text == "param":
            p = _LineParser(toks, ln, {})
            p.pos = 1
            name_t = p.next()
            if name_t.kind != "ident":
                raise ParseError("expected parameter name", ln, name_t.col)
            name = name_t.text
            if name in _RESERVED or _VAR_RE.match(name):
                raise ParseError(f"reserved name {name!r}", ln, name_t.col)
            if name in params:
                raise ParseError(f"duplicate parameter {name!r}", ln, name_t.col)
            p.expect("=")
            neg = False
            t = p.next()
            if t.kind == "-":
                neg = True
                t = p.next()
            if t.kind != "num":
                raise ParseError("expected a number", ln, t.col)
            if not p.at_end():
                raise p.error("trailing tokens after parameter value")
            params[name] = -float(t.text) if neg else float(t.text)

    intervals: dict[int, tuple[int, VarInterval]] = {}
    eqns: dict[int, tuple[int, Expr]] = {}
    for ln, toks in statements:
        head = toks[0]
        if head.kind == "ident" and head.text == "param":
            continue
        if head.kind == "ident" and head.text == "var":
            p = _LineParser(toks, ln, params)
            p.pos = 1
            name_t = p.next()
            m = _VAR_RE.match(name_t.text) if name_t.kind == "ident" else None
            if not m or int(m.group(1)) < 1:
                raise ParseError("expected a coordinate name like x1", ln, name_t.col)
            idx = int(m.group(1))
            kw = p.next()
            if kw.kind != "ident" or kw.text != "in":
                raise ParseError("expected 'in'", ln, kw.col)
            itv = p.parse_interval()
            if not p.at_end():
                raise p.error("trailing tokens after interval")
            if idx in intervals:
                raise ParseError(f"duplicate declaration for x{idx}", ln, name_t.col)
            intervals[idx] = (ln, itv)
            continue
        # Equation line: x<k> ' = expr
        p = _LineParser(toks, ln, params)
        lhs = p.next()
        m = _VAR_RE.match(lhs.text) if lhs.kind == "ident" else None
        if not m or int(m.group(1)) < 1:
            raise ParseError("expected a statement (var/param/equation)", ln, lhs.col)
        idx = int(m.group(1))
        p.expect("'")
        p.expect("=")
        e = p.parse_expr(0)
        if not p.at_end():
            raise p.error("trailing tokens after expression")
        if idx in eqns:
            raise ParseError(f"duplicate equation for x{idx}", ln, lhs.col)
        eqns[idx] = (ln, e)

    if not eqns:
        raise ParseError("no equations found")
    n = max(max(eqns), max(intervals) if intervals else 0)
    for k in range(1, n + 1):
        if k not in eqns:
            raise ParseError(f"missing equation for coordinate x{k}")
    for k, (ln, e) in sorted(eqns.items()):
        for v in sorted(free_vars(e)):
            if v > n:
                raise ParseError(f"unbound variable x{v}", ln)

    box = DomainBox(tuple(
        intervals[k][1] if k in intervals else UNBOUNDED for k in range(1, n + 1)))
    exprs = tuple(eqns[k][1] for k in range(1, n + 1))
    return SystemDef(n=n, exprs=exprs, domain=box)


def _endpoint_text(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return format_number(v) if v >= 0 else "-" + format_number(-v)


def emit_system(s: SystemDef) -> str:
    """Render a system back to DSL text (inverse of :func:`parse_system`)."""
    out = []
    for k, it in enumerate(s.domain.intervals, start=1):
        if it == UNBOUNDED:
            continue
        lo_b = "[" if it.lo_closed else "("
        hi_b = "]" if it.hi_closed else ")"
        out.append(f"var x{k} in {lo_b}{_endpoint_text(it.lo)}, {_endpoint_text(it.hi)}{hi_b}")
    for k, e in enumerate(s.exprs, start=1):
        out.append(f"x{k}' = {pretty(e)}")
    return "\n".join(out) + "\n"
