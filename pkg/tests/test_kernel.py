"""Tape compilation and backend agreement checks."""

import math
import random

import numpy as np
import pytest

from families import LAMBDA_OMEGA
from signflow import parse_system
from signflow._kernel import (
    BACKEND,
    HAVE_COMPILED,
    STATUS_FAILED,
    STATUS_OK,
    SystemTape,
    compile_system,
    make_kernel,
)
from signflow._kernel.pure import PyKernel
from signflow.system import eval_field

_ZOO = [
    "x1' = -x1",
    "x1' = 2.5*x1 - x2^3\nx2' = x1*x2 + 0.5",
    "x1' = tanh(x2) - sigmoid(x1)\nx2' = exp(-x1^2) - 0.5",
    "x1' = sin(x1) + cos(x2)\nx2' = x1/(1 + x2^2)",
    "x1' = sqrt(x1^2 + 1) - x2\nx2' = log(x1^2 + 1)",
    "x1' = -(x1 - x2)^2 + x1*x2*0.25\nx2' = -x2",
]


def _points(rng, n, count=50):
    return [[rng.uniform(-3, 3) for _ in range(n)] for _ in range(count)]


def test_tape_matches_tree_eval():
    rng = random.Random(11)
    for text in _ZOO:
        s = parse_system(text)
        k = PyKernel(compile_system(s.exprs, s.n))
        for x in _points(rng, s.n):
            want = eval_field(s, x)
            got = k.eval(x)
            assert np.allclose(got, want, rtol=1e-14, atol=1e-14), text


def test_tape_layout():
    s = parse_system("x1' = -x1 + x2\nx2' = x1*x2")
    tape = compile_system(s.exprs, s.n)
    assert isinstance(tape, SystemTape)
    assert tape.n == 2 and tape.n_vars == 2
    assert len(tape.starts) == 3
    assert tape.starts[0] == 0 and tape.starts[-1] == len(tape.ops)
    assert tape.stack_size >= 2


def test_tape_domain_errors_yield_nan_not_raise():
    s = parse_system("x1' = log(x1)")
    k = PyKernel(compile_system(s.exprs, s.n))
    assert math.isnan(k.eval([-1.0])[0])
    assert k.eval([0.0])[0] == -math.inf
    s = parse_system("x1' = sqrt(x1)")
    k = PyKernel(compile_system(s.exprs, s.n))
    assert math.isnan(k.eval([-4.0])[0])
    s = parse_system("x1' = 1/x1")
    k = PyKernel(compile_system(s.exprs, s.n))
    assert k.eval([0.0])[0] == math.inf


def test_backend_selection():
    assert BACKEND in ("compiled", "python")
    if not HAVE_COMPILED:
        assert BACKEND == "python"
    s = parse_system("x1' = -x1")
    k = make_kernel(compile_system(s.exprs, s.n))
    assert k.backend == ("compiled" if BACKEND == "compiled" else "python")


def _integrate_raw(k, x0, t_end, n_samples):
    ts = np.linspace(0.0, t_end, n_samples)
    n = k.n_vars
    lo = [-math.inf] * n
    hi = [math.inf] * n
    return k.integrate(x0, ts, 1e-8, 1e-10, 1e8, lo, hi, 1e-9, 10_000_000)


def test_compiled_backend_bitwise_identical():
    fast = pytest.importorskip("signflow._kernel._fast")
    rng = random.Random(5)
    cases = _ZOO[:4] + [LAMBDA_OMEGA]
    for text in cases:
        s = parse_system(text)
        tape = compile_system(s.exprs, s.n)
        kp = PyKernel(tape)
        kc = fast.CKernel(tape)
        for x in _points(rng, s.n, count=20):
            a = kp.eval(x)
            b = kc.eval(x)
            assert a.tobytes() == b.tobytes(), (text, x)


def test_compiled_trajectories_bitwise_identical():
    fast = pytest.importorskip("signflow._kernel._fast")
    s = parse_system(LAMBDA_OMEGA)
    tape = compile_system(s.exprs, s.n)
    sp, fp, tp, yp, ysp = _integrate_raw(PyKernel(tape), [2.0, 0.0], 50.0, 501)
    sc, fc, tc, yc, ysc = _integrate_raw(fast.CKernel(tape), [2.0, 0.0], 50.0, 501)
    assert (sp, fp) == (sc, fc) == (STATUS_OK, 501)
    assert tp == tc
    assert yp.tobytes() == yc.tobytes()
    assert ysp.tobytes() == ysc.tobytes()


def test_max_steps_failure_on_both_backends():
    s = parse_system(LAMBDA_OMEGA)
    tape = compile_system(s.exprs, s.n)
    kernels = [PyKernel(tape)]
    if HAVE_COMPILED:
        from signflow._kernel import _fast
        kernels.append(_fast.CKernel(tape))
    for k in kernels:
        ts = np.linspace(0.0, 100.0, 11)
        status, filled, *_ = k.integrate(
            [2.0, 0.0], ts, 1e-8, 1e-10, 1e8,
            [-math.inf] * 2, [math.inf] * 2, 1e-9, 3)
        assert status == STATUS_FAILED
        assert filled < 11


def test_pure_env_override(monkeypatch):
    import importlib
    import subprocess
    import sys

    # A fresh interpreter with SIGNFLOW_PURE=1 must pick the python backend.
    code = ("import signflow._kernel as k;"
            "print(k.BACKEND)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"SIGNFLOW_PURE": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True, text=True, cwd="/root/pkg")
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"
