"""Outward-safe interval arithmetic over plain floats.

No directed rounding is attempted: endpoints are computed in ordinary
double precision, which is adequate for the sign decisions made here
(conclusions are only drawn when an interval lies weakly on one side of
zero).  Division by an interval containing zero returns the whole line
rather than raising, since the quotient is defined almost everywhere;
``log`` and ``sqrt`` of intervals that leave their domain raise
:class:`IntervalDomainError` because the expression is then undefined on
part of the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .expr import Add, Div, Expr, Fun, Mul, Neg, Num, Pow, Sub, Var

__all__ = ["Interval", "IntervalDomainError", "FULL_LINE", "eval_interval"]

_INF = math.inf


class IntervalDomainError(ArithmeticError):
    """An interval evaluation left the domain of a partial function."""


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("NaN interval endpoint")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __contains__(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


FULL_LINE = Interval(-_INF, _INF)


def _guard(lo: float, hi: float) -> Interval:
    # NaN endpoints (e.g. inf - inf) widen to the whole line.
    if math.isnan(lo) or math.isnan(hi):
        return FULL_LINE
    return Interval(lo, hi)


def iadd(a: Interval, b: Interval) -> Interval:
    return _guard(a.lo + b.lo, a.hi + b.hi)


def isub(a: Interval, b: Interval) -> Interval:
    return _guard(a.lo - b.hi, a.hi - b.lo)


def ineg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def _mul_ep(p: float, q: float) -> float:
    # Endpoint product with the 0 * inf = 0 convention.
    if p == 0.0 or q == 0.0:
        return 0.0
    return p * q


def imul(a: Interval, b: Interval) -> Interval:
    c = (
        _mul_ep(a.lo, b.lo),
        _mul_ep(a.lo, b.hi),
        _mul_ep(a.hi, b.lo),
        _mul_ep(a.hi, b.hi),
    )
    return _guard(min(c), max(c))


def idiv(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        return FULL_LINE
    return imul(a, Interval(1.0 / b.hi, 1.0 / b.lo))


def ipow(a: Interval, k: int) -> Interval:
    if k == 0:
        return Interval(1.0, 1.0)
    if k < 0:
        return idiv(Interval(1.0, 1.0), ipow(a, -k))
    lo_p, hi_p = _powf(a.lo, k), _powf(a.hi, k)
    if k % 2 == 1:
        return _guard(lo_p, hi_p)
    if a.lo >= 0.0:
        return _guard(lo_p, hi_p)
    if a.hi <= 0.0:
        return _guard(hi_p, lo_p)
    return _guard(0.0, max(lo_p, hi_p))


def _powf(v: float, k: int) -> float:
    acc = 1.0
    b = v
    n = k
    while n:
        if n & 1:
            acc *= b
        b *= b
        n >>= 1
    return acc


def iexp(a: Interval) -> Interval:
    return Interval(_exp(a.lo), _exp(a.hi))


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return _INF


def ilog(a: Interval) -> Interval:
    if a.lo <= 0.0:
        raise IntervalDomainError(f"log over [{a.lo}, {a.hi}]")
    return Interval(math.log(a.lo), math.log(a.hi) if a.hi < _INF else _INF)


def isqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        raise IntervalDomainError(f"sqrt over [{a.lo}, {a.hi}]")
    return Interval(math.sqrt(a.lo), math.sqrt(a.hi) if a.hi < _INF else _INF)


def itanh(a: Interval) -> Interval:
    return Interval(math.tanh(a.lo) if a.lo > -_INF else -1.0,
                    math.tanh(a.hi) if a.hi < _INF else 1.0)


def isigmoid(a: Interval) -> Interval:
    return Interval(_sig(a.lo), _sig(a.hi))


def _sig(v: float) -> float:
    if v == -_INF:
        return 0.0
    if v == _INF:
        return 1.0
    try:
        e = math.exp(-v)
    except OverflowError:
        return 0.0
    return 1.0 / (1.0 + e)


_TWO_PI = 2.0 * math.pi


def _trig_range(a: Interval, maxima_at: float, minima_at: float,
                f) -> Interval:
    """Shared range computation for sin/cos over an interval.

    ``maxima_at``/``minima_at`` give one representative critical point;
    the full critical sets are those points plus multiples of 2*pi.
    """
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)) or a.width >= _TWO_PI:
        return Interval(-1.0, 1.0)
    lo_v, hi_v = f(a.lo), f(a.hi)
    lo_r, hi_r = min(lo_v, hi_v), max(lo_v, hi_v)
    if _contains_shifted(a, maxima_at):
        hi_r = 1.0
    if _contains_shifted(a, minima_at):
        lo_r = -1.0
    return Interval(lo_r, hi_r)


def _contains_shifted(a: Interval, point: float) -> bool:
    k = math.ceil((a.lo - point) / _TWO_PI)
    return point + k * _TWO_PI <= a.hi


def isin(a: Interval) -> Interval:
    return _trig_range(a, math.pi / 2.0, -math.pi / 2.0, math.sin)


def icos(a: Interval) -> Interval:
    return _trig_range(a, 0.0, math.pi, math.cos)


def eval_interval(e: Expr, box) -> Interval:
    """Interval enclosure of ``e`` over ``box`` (sequence of Interval)."""
    if isinstance(e, Num):
        return Interval(e.value, e.value)
    if isinstance(e, Var):
        return box[e.index - 1]
    if isinstance(e, Add):
        return iadd(eval_interval(e.lhs, box), eval_interval(e.rhs, box))
    if isinstance(e, Sub):
        return isub(eval_interval(e.lhs, box), eval_interval(e.rhs, box))
    if isinstance(e, Mul):
        return imul(eval_interval(e.lhs, box), eval_interval(e.rhs, box))
    if isinstance(e, Div):
        return idiv(eval_interval(e.lhs, box), eval_interval(e.rhs, box))
    if isinstance(e, Neg):
        return ineg(eval_interval(e.arg, box))
    if isinstance(e, Pow):
        return ipow(eval_interval(e.base, box), e.exponent)
    if isinstance(e, Fun):
        inner = eval_interval(e.arg, box)
        table = {
            "exp": iexp,
            "log": ilog,
            "tanh": itanh,
            "sigmoid": isigmoid,
            "sin": isin,
            "cos": icos,
            "sqrt": isqrt,
        }
        return table[e.name](inner)
    raise TypeError(f"cannot interval-evaluate {e!r}")
