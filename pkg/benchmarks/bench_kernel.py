"""Compare the compiled integration kernel against the pure-Python one.

Runs field evaluation and a long adaptive integration on two reference
systems, reports wall times and the speedup, and checks that both
backends produce identical trajectories.

Usage: python3 benchmarks/bench_kernel.py [--t-end T] [--repeat K]
"""

import argparse
import math
import sys
import time

import numpy as np

from signflow import parse_system
from signflow._kernel import HAVE_COMPILED, compile_system
from signflow._kernel.pure import PyKernel

SYSTEMS = {
    "oscillator": (
        "x1' = (1 - x1^2 - x2^2)*x1 - x2\n"
        "x2' = (1 - x1^2 - x2^2)*x2 + x1",
        (2.0, 0.0),
    ),
    "coupled-4d": (
        "x1' = -1.2*x1 + 0.8*tanh(x2) + 0.3*sigmoid(x4)\n"
        "x2' = -0.9*x2 + 0.5*tanh(x1) - 0.2*x2^3\n"
        "x3' = -1.1*x3 + 0.7*tanh(x2)\n"
        "x4' = -1.4*x4 + 0.6*tanh(x3) + 0.4*tanh(x1)",
        (1.0, -0.5, 0.25, -1.0),
    ),
}


def bench_eval(kernel, x0, repeat):
    x = list(x0)
    t0 = time.perf_counter()
    for _ in range(repeat):
        kernel.eval(x)
    return (time.perf_counter() - t0) / repeat


def bench_integrate(kernel, x0, t_end):
    n = kernel.n_vars
    ts = np.linspace(0.0, t_end, int(t_end * 10) + 1)
    lo = [-math.inf] * n
    hi = [math.inf] * n
    t0 = time.perf_counter()
    status, filled, t_stop, y_stop, ys = kernel.integrate(
        x0, ts, 1e-8, 1e-10, 1e8, lo, hi, 1e-9, 10_000_000)
    elapsed = time.perf_counter() - t0
    if status != 0 or filled != len(ts):
        raise RuntimeError(f"integration failed: status={status}")
    return elapsed, ys


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=200.0)
    ap.add_argument("--repeat", type=int, default=20000,
                    help="field evaluations per timing sample")
    args = ap.parse_args(argv)

    if not HAVE_COMPILED:
        print("compiled backend not built; nothing to compare against",
              file=sys.stderr)
        return 1
    from signflow._kernel import _fast

    print(f"{'system':<12} {'backend':<9} {'eval (us)':>10} "
          f"{'integrate (s)':>14} {'speedup':>8}  trajectories")
    for name, (text, x0) in SYSTEMS.items():
        s = parse_system(text)
        tape = compile_system(s.exprs, s.n)
        results = {}
        for label, kernel in (("python", PyKernel(tape)),
                              ("compiled", _fast.CKernel(tape))):
            ev = bench_eval(kernel, x0, args.repeat)
            ti, ys = bench_integrate(kernel, x0, args.t_end)
            results[label] = (ev, ti, ys)
        ep, tp, ysp = results["python"]
        ec, tc, ysc = results["compiled"]
        same = "identical" if ysp.tobytes() == ysc.tobytes() else "DIFFER"
        print(f"{name:<12} {'python':<9} {ep * 1e6:>10.2f} {tp:>14.3f} "
              f"{'':>8}  ")
        print(f"{name:<12} {'compiled':<9} {ec * 1e6:>10.2f} {tc:>14.3f} "
              f"{tp / tc:>7.1f}x  {same}")
        if same == "DIFFER":
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
