"""Interpreted twin of the compiled kernel.

Implements exactly the same tape semantics and Dormand-Prince 5(4) logic
as ``_fast.pyx`` so the two backends are interchangeable.  Arithmetic
follows IEEE conventions (NaN/inf instead of exceptions) to match the C
library behaviour of the compiled path.
"""

from __future__ import annotations

import math

import numpy as np

from .tape import (
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LOG,
    OP_MUL,
    OP_NEG,
    OP_POWI,
    OP_SIGMOID,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_TANH,
    OP_VAR,
    SystemTape,
)

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_DOMAIN_EXIT = 2
STATUS_FAILED = 3

_INF = math.inf
_NAN = math.nan

# Dormand-Prince 5(4) tableau (5th-order solution propagated, FSAL).
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)


def _ieee_div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or a != a:
            return _NAN
        return math.copysign(_INF, a) * math.copysign(1.0, b)
    return a / b


def _ieee_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return _INF


def _ieee_log(x: float) -> float:
    if x > 0.0:
        return math.log(x)
    if x == 0.0:
        return -_INF
    return _NAN


def _ieee_sqrt(x: float) -> float:
    if x >= 0.0:
        return math.sqrt(x)
    return _NAN


def _sigmoid(x: float) -> float:
    e = _ieee_exp(-x)
    return _ieee_div(1.0, 1.0 + e)


def _powi(b: float, k: int) -> float:
    if k < 0:
        return _ieee_div(1.0, _powi(b, -k))
    acc = 1.0
    n = k
    while n:
        if n & 1:
            acc *= b
        b *= b
        n >>= 1
    return acc


class PyKernel:
    """Tape evaluator plus adaptive integrator, interpreted."""

    backend = "python"

    def __init__(self, tape: SystemTape):
        self._tape = tape
        self.n = tape.n
        self.n_vars = tape.n_vars
        self._ops = [int(v) for v in tape.ops]
        self._args = [int(v) for v in tape.args]
        self._starts = [int(v) for v in tape.starts]
        self._consts = [float(v) for v in tape.consts]
        self._stack = [0.0] * tape.stack_size

    # -- evaluation -----------------------------------------------------

    def _eval_list(self, x: list[float], out: list[float]) -> None:
        ops, args = self._ops, self._args
        consts, starts = self._consts, self._starts
        stack = self._stack
        for i in range(self.n):
            sp = -1
            for p in range(starts[i], starts[i + 1]):
                op = ops[p]
                if op == OP_CONST:
                    sp += 1
                    stack[sp] = consts[args[p]]
                elif op == OP_VAR:
                    sp += 1
                    stack[sp] = x[args[p]]
                elif op == OP_ADD:
                    sp -= 1
                    stack[sp] = stack[sp] + stack[sp + 1]
                elif op == OP_SUB:
                    sp -= 1
                    stack[sp] = stack[sp] - stack[sp + 1]
                elif op == OP_MUL:
                    sp -= 1
                    stack[sp] = stack[sp] * stack[sp + 1]
                elif op == OP_DIV:
                    sp -= 1
                    stack[sp] = _ieee_div(stack[sp], stack[sp + 1])
                elif op == OP_NEG:
                    stack[sp] = -stack[sp]
                elif op == OP_POWI:
                    stack[sp] = _powi(stack[sp], args[p])
                elif op == OP_EXP:
                    stack[sp] = _ieee_exp(stack[sp])
                elif op == OP_LOG:
                    stack[sp] = _ieee_log(stack[sp])
                elif op == OP_TANH:
                    stack[sp] = math.tanh(stack[sp])
                elif op == OP_SIGMOID:
                    stack[sp] = _sigmoid(stack[sp])
                elif op == OP_SIN:
                    stack[sp] = math.sin(stack[sp])
                elif op == OP_COS:
                    stack[sp] = math.cos(stack[sp])
                elif op == OP_SQRT:
                    stack[sp] = _ieee_sqrt(stack[sp])
            out[i] = stack[0]

    def eval_into(self, x, out) -> None:
        xs = [float(v) for v in x]
        buf = [0.0] * self.n
        self._eval_list(xs, buf)
        for i in range(self.n):
            out[i] = buf[i]

    def eval(self, x) -> np.ndarray:
        out = np.empty(self.n)
        self.eval_into(x, out)
        return out

    # -- integration ----------------------------------------------------

    def integrate(self, x0, sample_ts, rtol: float, atol: float,
                  blowup: float, lo, hi, boundary_tol: float,
                  max_steps: int):
        """Adaptive integration recording states at ``sample_ts``.

        ``sample_ts`` must be strictly increasing with sample_ts[0] == 0.
        Returns ``(status, filled, t_stop, y_stop, ys)`` where ``ys`` has one
        row per requested sample and the first ``filled`` rows are valid.
        """
        n = self.n_vars
        m = len(sample_ts)
        ts = [float(v) for v in sample_ts]
        ys = np.empty((m, n))
        y = [float(v) for v in x0]
        lo_l = [float(v) for v in lo]
        hi_l = [float(v) for v in hi]

        ys[0, :] = y
        filled = 1
        t = ts[0]

        f = [0.0] * n
        self._eval_list(y, f)
        if not all(math.isfinite(v) for v in f):
            return STATUS_FAILED, filled, t, np.asarray(y), ys

        ynorm = max(abs(v) for v in y) if n else 0.0
        fnorm = max(abs(v) for v in f) if n else 0.0
        h = 0.01 * (1.0 + ynorm) / (1.0 + fnorm)
        h = min(h, ts[-1] - t if m > 1 else h)

        k1 = f
        k2 = [0.0] * n
        k3 = [0.0] * n
        k4 = [0.0] * n
        k5 = [0.0] * n
        k6 = [0.0] * n
        k7 = [0.0] * n
        yt = [0.0] * n
        ynew = [0.0] * n

        next_i = 1
        steps = 0
        while next_i < m:
            t_target = ts[next_i]
            if steps >= max_steps:
                return STATUS_FAILED, filled, t, np.asarray(y), ys
            hmin = 1e-13 * max(1.0, abs(t))
            h_eff = min(h, t_target - t)
            if h_eff < hmin:
                return STATUS_FAILED, filled, t, np.asarray(y), ys
            hits_target = (t + h_eff) >= t_target - 1e-12 * max(1.0, abs(t_target))
            steps += 1

            for i in range(n):
                yt[i] = y[i] + h_eff * _A21 * k1[i]
            self._eval_list(yt, k2)
            for i in range(n):
                yt[i] = y[i] + h_eff * (_A31 * k1[i] + _A32 * k2[i])
            self._eval_list(yt, k3)
            for i in range(n):
                yt[i] = y[i] + h_eff * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            self._eval_list(yt, k4)
            for i in range(n):
                yt[i] = y[i] + h_eff * (_A51 * k1[i] + _A52 * k2[i]
                                        + _A53 * k3[i] + _A54 * k4[i])
            self._eval_list(yt, k5)
            for i in range(n):
                yt[i] = y[i] + h_eff * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                        + _A64 * k4[i] + _A65 * k5[i])
            self._eval_list(yt, k6)
            for i in range(n):
                ynew[i] = y[i] + h_eff * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                          + _B5 * k5[i] + _B6 * k6[i])
            self._eval_list(ynew, k7)

            err = 0.0
            ok = True
            for i in range(n):
                if not (math.isfinite(ynew[i]) and math.isfinite(k7[i])):
                    ok = False
                    break
                e = h_eff * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                             + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                r = e / sc
                err += r * r
            if ok:
                err = math.sqrt(err / n)
                ok = math.isfinite(err)

            if not ok:
                h = h_eff * 0.5
                continue
            if err > 1.0:
                h = h_eff * max(0.2, 0.9 * err ** -0.2)
                continue

            t = t_target if hits_target else t + h_eff
            y, ynew = ynew, y
            k1, k7 = k7, k1
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = h_eff * factor

            amax = max(abs(v) for v in y)
            if amax > blowup:
                return STATUS_BLOWUP, filled, t, np.asarray(y), ys
            for i in range(n):
                if y[i] < lo_l[i] - boundary_tol or y[i] > hi_l[i] + boundary_tol:
                    return STATUS_DOMAIN_EXIT, filled, t, np.asarray(y), ys

            if hits_target:
                ys[filled, :] = y
                filled += 1
                next_i += 1

        return STATUS_OK, filled, t, np.asarray(y), ys

    def fixed_steps(self, x0, h: float, nsteps: int) -> np.ndarray:
        """Fixed-step propagation with the 5th-order stage combination."""
        n = self.n_vars
        y = [float(v) for v in x0]
        k1 = [0.0] * n
        k2 = [0.0] * n
        k3 = [0.0] * n
        k4 = [0.0] * n
        k5 = [0.0] * n
        k6 = [0.0] * n
        yt = [0.0] * n
        for _ in range(nsteps):
            self._eval_list(y, k1)
            for i in range(n):
                yt[i] = y[i] + h * _A21 * k1[i]
            self._eval_list(yt, k2)
            for i in range(n):
                yt[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
            self._eval_list(yt, k3)
            for i in range(n):
                yt[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            self._eval_list(yt, k4)
            for i in range(n):
                yt[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i]
                                    + _A53 * k3[i] + _A54 * k4[i])
            self._eval_list(yt, k5)
            for i in range(n):
                yt[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                    + _A64 * k4[i] + _A65 * k5[i])
            self._eval_list(yt, k6)
            for i in range(n):
                y[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                   + _B5 * k5[i] + _B6 * k6[i])
        return np.asarray(y)
