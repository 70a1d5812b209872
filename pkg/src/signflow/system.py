"""System definitions, domain boxes, and sign analysis of partials.

The sign of an off-diagonal partial derivative is decided in three stages:

1. symbolically (derivative simplifies to the literal 0 -> no dependence),
2. by interval arithmetic over the domain box (conclusive Plus/Minus when
   the enclosure lies weakly on one side of zero),
3. by sampling on a deterministic grid plus seeded pseudorandom points
   (opposite strict signs -> Theta with two witness points; otherwise the
   entry is labelled Theta conservatively).

Unbounded box edges are shrunk to +-BIGBOX before stages 2 and 3.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import interval as iv
from ._kernel import make_kernel
from ._kernel.tape import compile_system
from .expr import EvalDomainError, Expr, differentiate, eval_expr, free_vars

__all__ = [
    "BIGBOX",
    "BoundKind",
    "VarInterval",
    "DomainBox",
    "DomainClass",
    "SystemDef",
    "Sign",
    "SignEvidence",
    "SignVerdict",
    "SignOptions",
    "sign_of_partial",
    "sign_analysis",
    "eval_field",
    "EvaluationError",
]

BIGBOX = 1.0e6

_INF = math.inf


class BoundKind(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True, slots=True)
class VarInterval:
    """One coordinate's interval with endpoint openness."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("NaN interval endpoint")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        if (self.lo == -_INF and self.lo_closed) or (self.hi == _INF and self.hi_closed):
            raise ValueError("infinite endpoints must be open")

    @property
    def bounded(self) -> bool:
        return self.lo > -_INF and self.hi < _INF

    @property
    def unbounded(self) -> bool:
        return self.lo == -_INF and self.hi == _INF

    @property
    def half_bounded(self) -> bool:
        return (self.lo > -_INF) != (self.hi < _INF)


UNBOUNDED = VarInterval(-_INF, _INF)


class DomainClass(enum.Enum):
    C1 = "C1"  # every coordinate unbounded
    C2 = "C2"  # exactly one coordinate half-bounded, rest unbounded
    C3 = "C3"  # every coordinate [0, inf)
    C4 = "C4"  # every coordinate bounded
    OTHER = "OTHER"


def _classify_box(intervals: tuple[VarInterval, ...]) -> DomainClass:
    if all(it.unbounded for it in intervals):
        return DomainClass.C1
    if all(it.lo == 0.0 and it.lo_closed and it.hi == _INF for it in intervals):
        return DomainClass.C3
    if all(it.bounded for it in intervals):
        return DomainClass.C4
    half = sum(1 for it in intervals if it.half_bounded)
    if half == 1 and all(it.half_bounded or it.unbounded for it in intervals):
        return DomainClass.C2
    return DomainClass.OTHER


@dataclass(frozen=True)
class DomainBox:
    intervals: tuple[VarInterval, ...]
    klass: DomainClass = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        object.__setattr__(self, "klass", _classify_box(self.intervals))

    @property
    def n(self) -> int:
        return len(self.intervals)

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        """Membership in the closed box widened by ``tol`` (openness ignored)."""
        if len(x) != self.n:
            return False
        for v, it in zip(x, self.intervals):
            if not math.isfinite(v):
                return False
            if v < it.lo - tol or v > it.hi + tol:
                return False
        return True

    def shrunk(self, cap: float = BIGBOX) -> list[iv.Interval]:
        """Finite enclosure used for interval analysis and sampling."""
        out = []
        for it in self.intervals:
            lo = it.lo if it.lo > -_INF else -cap
            hi = it.hi if it.hi < _INF else cap
            out.append(iv.Interval(min(lo, hi), max(lo, hi)))
        return out

    def analysis_box(self, cap: float = BIGBOX) -> list[iv.Interval]:
        return self.shrunk(cap)


@dataclass(frozen=True)
class SystemDef:
    """Autonomous system x' = F(x) on a box domain."""

    n: int
    exprs: tuple[Expr, ...]
    domain: DomainBox

    def __post_init__(self):
        object.__setattr__(self, "exprs", tuple(self.exprs))
        if self.n < 1:
            raise ValueError("system dimension must be at least 1")
        if len(self.exprs) != self.n:
            raise ValueError("one defining expression per coordinate required")
        if self.domain.n != self.n:
            raise ValueError("domain dimension mismatch")
        for i, e in enumerate(self.exprs, start=1):
            bad = [v for v in free_vars(e) if v < 1 or v > self.n]
            if bad:
                raise ValueError(f"equation {i} references unknown coordinate x{bad[0]}")


class Sign(enum.Enum):
    ZERO = "0"
    PLUS = "+"
    MINUS = "-"
    THETA = "?"


@dataclass(frozen=True)
class SignEvidence:
    kind: str  # "symbolic-zero" | "interval" | "witnesses" | "conservative"
    bounds: tuple[float, float] | None = None
    witness_pos: tuple[tuple[float, ...], float] | None = None
    witness_neg: tuple[tuple[float, ...], float] | None = None
    note: str = ""


@dataclass(frozen=True)
class SignVerdict:
    sign: Sign
    evidence: SignEvidence

    @property
    def conservative(self) -> bool:
        return self.sign is Sign.THETA and self.evidence.kind == "conservative"


@dataclass(frozen=True)
class SignOptions:
    bigbox: float = BIGBOX
    grid_points_per_axis: int = 5
    grid_cap: int = 5 ** 6
    random_points: int = 256
    seed: int = 42


def sign_of_partial(s: SystemDef, i: int, j: int,
                    opts: SignOptions | None = None) -> SignVerdict:
    """Sign of dF_i/dx_j over the domain box.  Requires ``i != j``."""
    if i == j:
        raise ValueError("diagonal entries are not part of the interaction structure")
    if not (1 <= i <= s.n and 1 <= j <= s.n):
        raise ValueError("coordinate index out of range")
    opts = opts or SignOptions()
    d = differentiate(s.exprs[i - 1], j)
    return _sign_of_expr(d, s, opts)


def _sign_of_expr(d: Expr, s: SystemDef, opts: SignOptions) -> SignVerdict:
    from .expr import Num

    if isinstance(d, Num) and d.value == 0.0:
        return SignVerdict(Sign.ZERO, SignEvidence(kind="symbolic-zero"))

    box = s.domain.analysis_box(opts.bigbox)
    interval_note = ""
    try:
        enc = iv.eval_interval(d, box)
    except iv.IntervalDomainError as exc:
        enc = None
        interval_note = f"interval evaluation failed: {exc}"
    if enc is not None:
        if enc.lo >= 0.0:
            return SignVerdict(
                Sign.PLUS, SignEvidence(kind="interval", bounds=(enc.lo, enc.hi)))
        if enc.hi <= 0.0:
            return SignVerdict(
                Sign.MINUS, SignEvidence(kind="interval", bounds=(enc.lo, enc.hi)))

    if interval_note:
        # The derivative is undefined on part of the box; no one-sided
        # conclusion is safe, so report an ambiguous entry.
        return SignVerdict(Sign.THETA, SignEvidence(kind="conservative",
                                                    note=interval_note))

    pos, neg = _sample_signs(d, s, box, opts)
    if pos is not None and neg is not None:
        return SignVerdict(Sign.THETA, SignEvidence(
            kind="witnesses", witness_pos=pos, witness_neg=neg))
    note = "interval enclosure straddles zero; sampling found no strict sign change"
    if enc is not None:
        return SignVerdict(Sign.THETA, SignEvidence(
            kind="conservative", bounds=(enc.lo, enc.hi), note=note))
    return SignVerdict(Sign.THETA, SignEvidence(kind="conservative", note=note))


def _sample_signs(d: Expr, s: SystemDef, box, opts: SignOptions):
    """Strict-sign witnesses of ``d`` on grid + pseudorandom points."""
    tape = compile_system([d], s.n)
    kern = make_kernel(tape)
    pos = neg = None
    out = np.empty(1)
    for point in _sample_points(box, opts):
        kern.eval_into(np.asarray(point), out)
        v = out[0]
        if not math.isfinite(v):
            continue
        if v > 0.0 and pos is None:
            pos = (tuple(point), v)
        elif v < 0.0 and neg is None:
            neg = (tuple(point), v)
        if pos is not None and neg is not None:
            break
    return pos, neg


def _axis_points(it: iv.Interval, k: int) -> list[float]:
    if it.width == 0.0:
        return [it.lo]
    eps = 1e-9 * it.width
    lo, hi = it.lo + eps, it.hi - eps
    return [lo + (hi - lo) * t / (k - 1) for t in range(k)]


def _sample_points(box, opts: SignOptions):
    axes = [_axis_points(it, opts.grid_points_per_axis) for it in box]
    grid = itertools.islice(itertools.product(*axes), opts.grid_cap)
    yield from grid
    rng = np.random.default_rng(opts.seed)
    lo = np.array([it.lo for it in box])
    hi = np.array([it.hi for it in box])
    for _ in range(opts.random_points):
        u = rng.random(len(box))
        yield tuple(lo + u * (hi - lo))


def sign_analysis(s: SystemDef, opts: SignOptions | None = None
                  ) -> dict[tuple[int, int], SignVerdict]:
    """All off-diagonal verdicts, keyed by (i, j) for dF_i/dx_j."""
    opts = opts or SignOptions()
    out = {}
    for i in range(1, s.n + 1):
        for j in range(1, s.n + 1):
            if i != j:
                out[(i, j)] = sign_of_partial(s, i, j, opts)
    return out


class EvaluationError(ArithmeticError):
    """Field evaluation failed; carries the offending coordinate (1-based)."""

    def __init__(self, coordinate: int, message: str):
        super().__init__(f"F_{coordinate}: {message}")
        self.coordinate = coordinate


def eval_field(s: SystemDef, x: Sequence[float]) -> list[float]:
    """Evaluate F at a point, requiring finite components."""
    if len(x) != s.n:
        raise ValueError(f"point has dimension {len(x)}, system has {s.n}")
    out = []
    for i, e in enumerate(s.exprs, start=1):
        try:
            v = eval_expr(e, x)
        except EvalDomainError as exc:
            raise EvaluationError(i, str(exc)) from exc
        if not math.isfinite(v):
            raise EvaluationError(i, f"non-finite value {v!r}")
        out.append(v)
    return out
