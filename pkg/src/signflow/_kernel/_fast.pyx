# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tape evaluator and Dormand-Prince 5(4) integrator.

Mirrors ``pure.py`` instruction for instruction; see that module for the
semantics.  Keep the two in sync when changing either.
"""

from libc.math cimport exp, log, pow, sqrt, tanh, sin, cos, fabs, INFINITY

import numpy as np

from .tape import SystemTape

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_DOMAIN_EXIT = 2
STATUS_FAILED = 3

cdef enum:
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

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline bint _finite(double v) nogil:
    return v == v and v != INFINITY and v != -INFINITY


cdef inline double _powi(double b, int k) nogil:
    cdef double acc = 1.0
    cdef int n = k
    if n < 0:
        return 1.0 / _powi(b, -n)
    while n:
        if n & 1:
            acc *= b
        b *= b
        n >>= 1
    return acc


cdef inline double _sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


cdef class CKernel:
    """Compiled twin of ``pure.PyKernel``."""

    cdef public int n
    cdef public int n_vars
    cdef int[::1] ops
    cdef int[::1] args
    cdef int[::1] starts
    cdef double[::1] consts
    cdef double[::1] stack

    backend = "compiled"

    def __init__(self, tape):
        self.n = tape.n
        self.n_vars = tape.n_vars
        self.ops = np.ascontiguousarray(tape.ops, dtype=np.int32)
        self.args = np.ascontiguousarray(tape.args, dtype=np.int32)
        self.starts = np.ascontiguousarray(tape.starts, dtype=np.int32)
        self.consts = np.ascontiguousarray(tape.consts, dtype=np.float64)
        self.stack = np.empty(tape.stack_size, dtype=np.float64)

    cdef void _eval(self, double[::1] x, double[::1] out) nogil:
        cdef int i, p, op, sp
        cdef double[::1] stack = self.stack
        for i in range(self.n):
            sp = -1
            for p in range(self.starts[i], self.starts[i + 1]):
                op = self.ops[p]
                if op == OP_CONST:
                    sp += 1
                    stack[sp] = self.consts[self.args[p]]
                elif op == OP_VAR:
                    sp += 1
                    stack[sp] = x[self.args[p]]
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
                    stack[sp] = stack[sp] / stack[sp + 1]
                elif op == OP_NEG:
                    stack[sp] = -stack[sp]
                elif op == OP_POWI:
                    stack[sp] = _powi(stack[sp], self.args[p])
                elif op == OP_EXP:
                    stack[sp] = exp(stack[sp])
                elif op == OP_LOG:
                    stack[sp] = log(stack[sp])
                elif op == OP_TANH:
                    stack[sp] = tanh(stack[sp])
                elif op == OP_SIGMOID:
                    stack[sp] = _sigmoid(stack[sp])
                elif op == OP_SIN:
                    stack[sp] = sin(stack[sp])
                elif op == OP_COS:
                    stack[sp] = cos(stack[sp])
                elif op == OP_SQRT:
                    stack[sp] = sqrt(stack[sp])
            out[i] = stack[0]

    def eval_into(self, x, out):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        cdef double[::1] ov = out
        self._eval(xv, ov)

    def eval(self, x):
        out = np.empty(self.n)
        self.eval_into(x, out)
        return out

    def integrate(self, x0, sample_ts, double rtol, double atol,
                  double blowup, lo, hi, double boundary_tol,
                  long max_steps):
        cdef int n = self.n_vars
        cdef double[::1] ts = np.ascontiguousarray(sample_ts, dtype=np.float64)
        cdef int m = ts.shape[0]
        ys_arr = np.empty((m, n))
        cdef double[:, ::1] ys = ys_arr
        cdef double[::1] y = np.array(x0, dtype=np.float64)
        cdef double[::1] lo_v = np.ascontiguousarray(lo, dtype=np.float64)
        cdef double[::1] hi_v = np.ascontiguousarray(hi, dtype=np.float64)
        cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n)
        cdef double[::1] k4 = np.empty(n), k5 = np.empty(n), k6 = np.empty(n)
        cdef double[::1] k7 = np.empty(n), yt = np.empty(n), ynew = np.empty(n)
        cdef double[::1] tmp
        cdef int i, filled, next_i
        cdef long steps = 0
        cdef double t, h, h_eff, hmin, t_target, err, e, sc, r, factor
        cdef double ynorm, fnorm, amax
        cdef bint ok, hits_target

        for i in range(n):
            ys[0, i] = y[i]
        filled = 1
        t = ts[0]

        self._eval(y, k1)
        ok = True
        for i in range(n):
            if not _finite(k1[i]):
                ok = False
        if not ok:
            return STATUS_FAILED, filled, t, np.asarray(y).copy(), ys_arr

        ynorm = 0.0
        fnorm = 0.0
        for i in range(n):
            if fabs(y[i]) > ynorm:
                ynorm = fabs(y[i])
            if fabs(k1[i]) > fnorm:
                fnorm = fabs(k1[i])
        h = 0.01 * (1.0 + ynorm) / (1.0 + fnorm)
        if m > 1 and ts[m - 1] - t < h:
            h = ts[m - 1] - t

        next_i = 1
        while next_i < m:
            t_target = ts[next_i]
            if steps >= max_steps:
                return STATUS_FAILED, filled, t, np.asarray(y).copy(), ys_arr
            hmin = 1e-13 * max(1.0, fabs(t))
            h_eff = h
            if t_target - t < h_eff:
                h_eff = t_target - t
            if h_eff < hmin:
                return STATUS_FAILED, filled, t, np.asarray(y).copy(), ys_arr
            hits_target = (t + h_eff) >= t_target - 1e-12 * max(1.0, fabs(t_target))
            steps += 1

            for i in range(n):
                yt[i] = y[i] + h_eff * A21 * k1[i]
            self._eval(yt, k2)
            for i in range(n):
                yt[i] = y[i] + h_eff * (A31 * k1[i] + A32 * k2[i])
            self._eval(yt, k3)
            for i in range(n):
                yt[i] = y[i] + h_eff * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            self._eval(yt, k4)
            for i in range(n):
                yt[i] = y[i] + h_eff * (A51 * k1[i] + A52 * k2[i]
                                        + A53 * k3[i] + A54 * k4[i])
            self._eval(yt, k5)
            for i in range(n):
                yt[i] = y[i] + h_eff * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                        + A64 * k4[i] + A65 * k5[i])
            self._eval(yt, k6)
            for i in range(n):
                ynew[i] = y[i] + h_eff * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                          + B5 * k5[i] + B6 * k6[i])
            self._eval(ynew, k7)

            err = 0.0
            ok = True
            for i in range(n):
                if not (_finite(ynew[i]) and _finite(k7[i])):
                    ok = False
                    break
                e = h_eff * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i]
                             + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * max(fabs(y[i]), fabs(ynew[i]))
                r = e / sc
                err += r * r
            if ok:
                err = sqrt(err / n)
                ok = _finite(err)

            if not ok:
                h = h_eff * 0.5
                continue
            if err > 1.0:
                h = h_eff * max(0.2, 0.9 * pow(err, -0.2))
                continue

            if hits_target:
                t = t_target
            else:
                t = t + h_eff
            tmp = y
            y = ynew
            ynew = tmp
            tmp = k1
            k1 = k7
            k7 = tmp
            if err == 0.0:
                factor = 5.0
            else:
                factor = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
            h = h_eff * factor

            amax = 0.0
            for i in range(n):
                if fabs(y[i]) > amax:
                    amax = fabs(y[i])
            if amax > blowup:
                return STATUS_BLOWUP, filled, t, np.asarray(y).copy(), ys_arr
            for i in range(n):
                if y[i] < lo_v[i] - boundary_tol or y[i] > hi_v[i] + boundary_tol:
                    return STATUS_DOMAIN_EXIT, filled, t, np.asarray(y).copy(), ys_arr

            if hits_target:
                for i in range(n):
                    ys[filled, i] = y[i]
                filled += 1
                next_i += 1

        return STATUS_OK, filled, t, np.asarray(y).copy(), ys_arr

    def fixed_steps(self, x0, double h, long nsteps):
        cdef int n = self.n_vars
        cdef double[::1] y = np.array(x0, dtype=np.float64)
        cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n)
        cdef double[::1] k4 = np.empty(n), k5 = np.empty(n), k6 = np.empty(n)
        cdef double[::1] yt = np.empty(n)
        cdef long s
        cdef int i
        for s in range(nsteps):
            self._eval(y, k1)
            for i in range(n):
                yt[i] = y[i] + h * A21 * k1[i]
            self._eval(yt, k2)
            for i in range(n):
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            self._eval(yt, k3)
            for i in range(n):
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            self._eval(yt, k4)
            for i in range(n):
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i]
                                    + A53 * k3[i] + A54 * k4[i])
            self._eval(yt, k5)
            for i in range(n):
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                    + A64 * k4[i] + A65 * k5[i])
            self._eval(yt, k6)
            for i in range(n):
                y[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
        return np.asarray(y).copy()
