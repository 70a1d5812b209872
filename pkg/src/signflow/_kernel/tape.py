"""Flat postfix tapes for fast field evaluation.

An expression tree is compiled once into a stack program (parallel opcode
and argument arrays); a system is the concatenation of one tape per
coordinate.  Both the compiled and the pure-Python backends execute the
same layout, so they can be benchmarked against each other on identical
inputs.

Tape evaluation never raises: log/sqrt outside their domain yield NaN,
overflow yields inf, division by zero follows IEEE conventions.  Callers
that need hard errors (the public field evaluator) check finiteness
afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..expr import Add, Div, Expr, Fun, Mul, Neg, Num, Pow, Sub, Var

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POWI = 7
OP_EXP = 8
OP_LOG = 9
OP_TANH = 10
OP_SIGMOID = 11
OP_SIN = 12
OP_COS = 13
OP_SQRT = 14

_FUN_OPS = {
    "exp": OP_EXP,
    "log": OP_LOG,
    "tanh": OP_TANH,
    "sigmoid": OP_SIGMOID,
    "sin": OP_SIN,
    "cos": OP_COS,
    "sqrt": OP_SQRT,
}


@dataclass(frozen=True)
class SystemTape:
    """Compiled form of a system of ``n`` scalar expressions."""

    n: int
    n_vars: int
    ops: np.ndarray      # int32[m], opcodes for all tapes back to back
    args: np.ndarray     # int32[m], const index / var index / exponent
    starts: np.ndarray   # int32[n + 1], tape i occupies ops[starts[i]:starts[i+1]]
    consts: np.ndarray   # float64 pool shared by all tapes
    stack_size: int


def compile_system(exprs: list[Expr], n_vars: int) -> SystemTape:
    ops: list[int] = []
    args: list[int] = []
    consts: list[float] = []
    starts = [0]
    max_depth = 0
    for e in exprs:
        depth = _emit(e, ops, args, consts)
        max_depth = max(max_depth, depth)
        starts.append(len(ops))
    return SystemTape(
        n=len(exprs),
        n_vars=n_vars,
        ops=np.asarray(ops, dtype=np.int32),
        args=np.asarray(args, dtype=np.int32),
        starts=np.asarray(starts, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        stack_size=max(max_depth, 1),
    )


def _emit(e: Expr, ops: list[int], args: list[int], consts: list[float]) -> int:
    """Append postfix code for ``e``; returns the stack depth it needs."""
    if isinstance(e, Num):
        ops.append(OP_CONST)
        args.append(len(consts))
        consts.append(e.value)
        return 1
    if isinstance(e, Var):
        ops.append(OP_VAR)
        args.append(e.index - 1)
        return 1
    if isinstance(e, (Add, Sub, Mul, Div)):
        dl = _emit(e.lhs, ops, args, consts)
        dr = _emit(e.rhs, ops, args, consts)
        op = {Add: OP_ADD, Sub: OP_SUB, Mul: OP_MUL, Div: OP_DIV}[type(e)]
        ops.append(op)
        args.append(0)
        return max(dl, dr + 1)
    if isinstance(e, Neg):
        d = _emit(e.arg, ops, args, consts)
        ops.append(OP_NEG)
        args.append(0)
        return d
    if isinstance(e, Pow):
        d = _emit(e.base, ops, args, consts)
        ops.append(OP_POWI)
        args.append(e.exponent)
        return d
    if isinstance(e, Fun):
        d = _emit(e.arg, ops, args, consts)
        ops.append(_FUN_OPS[e.name])
        args.append(0)
        return d
    raise TypeError(f"cannot compile {e!r}")
