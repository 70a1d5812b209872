"""Acceptance gate: nine desk-scale property checks.

Each test prints one ``ACCEPTANCE <k> <name>: PASS|FAIL`` line (visible
with ``pytest -s`` or in the failure log) so a reviewer can read the
verdicts straight off the output.  Tolerances and budgets are pinned
here and nowhere else.
"""

import json
import math
import os
import random
import time

import numpy as np

from families import (
    CHAIN3,
    COOP_PAIR,
    LAMBDA_OMEGA,
    LABELS_PM,
    NEG_LOOP_PAIR,
    random_cooperative_system,
    random_flip,
    random_graph_sweep,
)
from oracles import (
    all_simple_cycles,
    as_plain,
    cycle_sign,
    fundamental_brute,
    loop_edge_set,
)
from signflow import (
    SignLabel,
    SimOptions,
    apply_change,
    build_interaction_graph,
    check_monotone,
    check_semiconjugacy,
    classify,
    decompose,
    estimate_omega_limit,
    find_consistent_spin,
    integrate,
    parse_system,
    plan_transform,
    propagate_fixed,
)
from signflow._kernel import compile_system, make_kernel
from signflow.cli import main as cli_main
from signflow.graph import enumerate_simple_loops, fundamental_subgraphs, subgraph_predicates
from signflow.spin import SpinFailure
from signflow.system import eval_field


def _report(k: int, name: str, ok: bool, extra: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    tail = f" ({extra})" if extra else ""
    print(f"\nACCEPTANCE {k} {name}: {status}{tail}")


# -- criterion 1 ---------------------------------------------------------


def test_01_spin_oracle_equivalence():
    t0 = time.perf_counter()
    mismatches = 0
    count = 0
    for g in random_graph_sweep(seed=101, count=2000, max_n=5,
                                labels=LABELS_PM):
        count += 1
        spin_ok = not isinstance(find_consistent_spin(g), SpinFailure)
        has_negative = any(
            loop.sign is SignLabel.MINUS for loop in enumerate_simple_loops(g))
        if spin_ok != (not has_negative):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and count >= 2000 and elapsed < 30.0
    _report(1, "spin oracle equivalence", ok,
            f"{count} graphs, {mismatches} mismatches, {elapsed:.1f}s")
    assert mismatches == 0
    assert count >= 2000
    assert elapsed < 30.0


# -- criterion 2 ---------------------------------------------------------


def test_02_fundamental_subgraph_oracle():
    t0 = time.perf_counter()
    mismatches = 0
    structure_faults = 0
    count = 0
    for g in random_graph_sweep(seed=202, count=300, max_n=6,
                                labels=LABELS_PM):
        count += 1
        got = fundamental_subgraphs(g)
        got_sets = {(sg.vertices, sg.edges) for sg in got}
        _, plain = as_plain(g)
        want = fundamental_brute(g.n, set(plain))
        if got_sets != want:
            mismatches += 1
            continue
        seen: set[int] = set()
        for sg in got:
            preds = subgraph_predicates(g, sg)
            if not preds.full or (seen & set(sg.vertices)):
                structure_faults += 1
            seen |= set(sg.vertices)
    elapsed = time.perf_counter() - t0
    ok = (mismatches == 0 and structure_faults == 0
          and count >= 300 and elapsed < 60.0)
    _report(2, "fundamental subgraph oracle", ok,
            f"{count} graphs, {mismatches} mismatches, {elapsed:.1f}s")
    assert mismatches == 0
    assert structure_faults == 0
    assert count >= 300
    assert elapsed < 60.0


# -- criterion 3 ---------------------------------------------------------


def test_03_classification_chain():
    labels = (SignLabel.PLUS, SignLabel.MINUS, SignLabel.THETA)
    violations = 0
    bad_witnesses = 0
    count = 0
    for g in random_graph_sweep(seed=303, count=1000, max_n=6,
                                labels=labels):
        count += 1
        n, plain = as_plain(g)
        cycles = all_simple_cycles(n, set(plain))
        loop_e = loop_edge_set(n, set(plain))
        coop = all(lab == "+" for lab in plain.values())
        quasi = all(plain[e] == "+" for e in loop_e)
        coherent = all(cycle_sign(c, plain) == "+" for c in cycles)
        expected = ("cooperative" if coop else
                    "quasicooperative" if quasi else
                    "coherent" if coherent else "incoherent")
        verdict = classify(g)
        if verdict.klass.value != expected:
            violations += 1
            continue
        if expected == "incoherent":
            w = verdict.witness
            if w is None:
                bad_witnesses += 1
                continue
            prod = 1
            ambiguous = False
            for (u, v, lab) in w.edges:
                if g.label(u, v) is not lab:
                    bad_witnesses += 1
                    break
                if lab is SignLabel.THETA:
                    ambiguous = True
                elif lab is SignLabel.MINUS:
                    prod = -prod
            else:
                if not ambiguous and prod != -1:
                    bad_witnesses += 1
    ok = violations == 0 and bad_witnesses == 0 and count >= 1000
    _report(3, "classification chain", ok,
            f"{count} graphs, {violations} violations, "
            f"{bad_witnesses} bad witnesses")
    assert violations == 0
    assert bad_witnesses == 0
    assert count >= 1000


# -- criteria 4 and 5 share one generated family --------------------------

_SUITE: list | None = None


def _coherent_suite():
    """100 coherent systems: random cooperative cores with sign flips."""
    global _SUITE
    if _SUITE is None:
        rng = random.Random(404)
        suite = []
        for _ in range(100):
            n = rng.randint(2, 4)
            core = random_cooperative_system(rng, n)
            flip = random_flip(rng, n)
            f = apply_change(core, flip)
            suite.append((f, build_interaction_graph(f)))
        _SUITE = suite
    return _SUITE


def test_04_transform_correctness():
    suite = _coherent_suite()
    rng = random.Random(405)
    tight = SimOptions(rtol=1e-10, atol=1e-12)
    times = np.linspace(0.0, 10.0, 101)
    bad_class = 0
    worst = 0.0
    for f, gf in suite:
        change = plan_transform(gf)
        g_sys = apply_change(f, change)
        klass = classify(build_interaction_graph(g_sys)).klass.value
        if klass not in ("cooperative", "quasicooperative"):
            bad_class += 1
            continue
        kf = make_kernel(compile_system(f.exprs, f.n))
        kg = make_kernel(compile_system(g_sys.exprs, g_sys.n))
        perm_idx = [p - 1 for p in change.perm]
        rho = np.asarray(change.rho, dtype=float)
        for _ in range(20):
            x0 = np.array([rng.uniform(-2.0, 2.0) for _ in range(f.n)])
            ta = integrate(f, x0, times=times, opts=tight, kernel=kf)
            tb = integrate(g_sys, change.apply_point(x0),
                           times=times, opts=tight, kernel=kg)
            mapped = ta.states[:, perm_idx] * rho
            worst = max(worst, float(np.max(np.abs(mapped - tb.states))))
    ok = bad_class == 0 and worst <= 1e-6
    _report(4, "transform correctness", ok,
            f"100 systems, {bad_class} misclassified, "
            f"max conjugacy deviation {worst:.2e}")
    assert bad_class == 0
    assert worst <= 1e-6


def test_05_cascade_semiconjugacy():
    suite = _coherent_suite()
    rng = random.Random(505)
    failures = 0
    worst = 0.0
    worst_jac = 0.0
    for f, gf in suite:
        d = decompose(f, graph=gf)
        rep = check_semiconjugacy(f, d, n_points=10, tol=1e-6)
        worst = max(worst, rep.max_deviation)
        if not rep.passed:
            failures += 1
            continue
        n1, n = d.n1, f.n
        if n1 == n:
            continue
        for _ in range(50):
            x = np.array([rng.uniform(-2.0, 2.0) for _ in range(n)])
            for j in range(n1, n):
                h = 1e-6 * (1.0 + abs(x[j]))
                xp = x.copy(); xp[j] += h
                xm = x.copy(); xm[j] -= h
                fp = eval_field(d.system, xp)
                fm = eval_field(d.system, xm)
                for i in range(n1):
                    worst_jac = max(worst_jac,
                                    abs(fp[i] - fm[i]) / (2.0 * h))
    ok = failures == 0 and worst <= 1e-6 and worst_jac <= 1e-12
    _report(5, "cascade semiconjugacy", ok,
            f"max flow deviation {worst:.2e}, "
            f"max forbidden-block entry {worst_jac:.2e}")
    assert failures == 0
    assert worst <= 1e-6
    assert worst_jac <= 1e-12


# -- criterion 6 ---------------------------------------------------------


def test_06_monotonicity():
    rng = random.Random(606)
    violations = 0
    checked = 0
    for _ in range(20):
        n = rng.randint(2, 4)
        s = random_cooperative_system(rng, n)
        rep = check_monotone(s, n_pairs=10, tol=1e-7,
                             opts=SimOptions(t_end=50.0))
        checked += rep.checked
        violations += len(rep.violations)
    ok = violations == 0 and checked == 200
    _report(6, "monotonicity", ok,
            f"{checked} ordered pairs, {violations} violations")
    assert violations == 0
    assert checked == 200


# -- criterion 7 ---------------------------------------------------------


def test_07_no_cycles_in_coherent_suite():
    t0 = time.perf_counter()
    rng = random.Random(707)
    verdicts: dict[str, int] = {}
    for _ in range(50):
        n = rng.randint(2, 4)
        core = random_cooperative_system(rng, n)
        f = apply_change(core, random_flip(rng, n))
        for _ in range(5):
            x0 = tuple(rng.uniform(-2.0, 2.0) for _ in range(n))
            est = estimate_omega_limit(f, x0)
            verdicts[est.verdict] = verdicts.get(est.verdict, 0) + 1

    lam = parse_system(LAMBDA_OMEGA)
    lam_class = classify(build_interaction_graph(lam)).klass.value
    lam_est = estimate_omega_limit(lam, (2.0, 0.0))
    period_ok = (lam_est.verdict == "Cycle"
                 and abs(lam_est.period - 2.0 * math.pi) <= 0.05)
    elapsed = time.perf_counter() - t0

    cycles = verdicts.get("Cycle", 0)
    ok = (cycles == 0 and period_ok and lam_class == "incoherent"
          and elapsed < 300.0)
    _report(7, "no cycles in coherent suite", ok,
            f"verdicts {verdicts}, control {lam_est.verdict} "
            f"period {lam_est.period and round(lam_est.period, 4)} "
            f"class {lam_class}, {elapsed:.1f}s")
    assert cycles == 0
    assert lam_class == "incoherent"
    assert period_ok
    assert elapsed < 300.0


# -- criterion 8 ---------------------------------------------------------


def test_08_integrator_sanity():
    s = parse_system("x1' = -x1")
    tr = integrate(s, (1.0,), t_end=1.0)
    err = abs(tr.states[-1][0] - math.exp(-1.0))
    e1 = abs(propagate_fixed(s, (1.0,), 1.0, 16)[0] - math.exp(-1.0))
    e2 = abs(propagate_fixed(s, (1.0,), 1.0, 32)[0] - math.exp(-1.0))
    ratio = e1 / e2
    ok = err <= 1e-6 and ratio >= 12.0
    _report(8, "integrator sanity", ok,
            f"|x(1) - 1/e| = {err:.2e}, halving ratio {ratio:.1f}")
    assert err <= 1e-6
    assert ratio >= 12.0


# -- criterion 9 ---------------------------------------------------------

_CUBIC = "var x1 in [-2, 2]\nx1' = x1 - x1^3"
_BOTH_MINUS = "x1' = -x1 - x2\nx2' = -x1 - x2"

_CLI_SUITE = [
    ("analyze-coop.json", 0,
     ["analyze", "--input", "in/coop.ode", "--out", "out/analyze-coop.json"]),
    ("analyze-graph.json", 0,
     ["analyze", "--input", "in/twoloop.json",
      "--out", "out/analyze-graph.json"]),
    ("analyze-lw.json", 0,
     ["analyze", "--input", "in/lw.ode", "--out", "out/analyze-lw.json"]),
    ("spin-coop.json", 0,
     ["spin", "--input", "in/coop.ode", "--out", "out/spin-coop.json"]),
    ("spin-negloop.json", 4,
     ["spin", "--input", "in/negloop.ode", "--out", "out/spin-negloop.json"]),
    ("decompose-chain.json", 0,
     ["decompose", "--input", "in/chain.ode",
      "--out", "out/decompose-chain.json"]),
    ("decompose-negloop.json", 4,
     ["decompose", "--input", "in/negloop.ode",
      "--out", "out/decompose-negloop.json"]),
    ("transform-flip.json", 0,
     ["transform", "--input", "in/bothminus.ode", "--json",
      "--out", "out/transform-flip.json"]),
    ("simulate-coop.csv", 0,
     ["simulate", "--input", "in/coop.ode", "--x0", "1,1", "--t-end", "5",
      "--out", "out/simulate-coop.csv"]),
    ("simulate-coop.json", 0,
     ["simulate", "--input", "in/coop.ode", "--x0", "1,1", "--t-end", "5",
      "--json", "--out", "out/simulate-coop.json"]),
    ("omega-lw.json", 0,
     ["omega", "--input", "in/lw.ode", "--x0", "2,0",
      "--out", "out/omega-lw.json"]),
    ("equilibria-cubic.json", 0,
     ["equilibria", "--input", "in/cubic.ode",
      "--out", "out/equilibria-cubic.json"]),
    ("verify-coop.json", 0,
     ["verify", "--input", "in/coop.ode", "--tol.t_end", "60",
      "--out", "out/verify-coop.json"]),
]


def _run_cli_suite(root) -> dict[str, bytes]:
    root.mkdir()
    (root / "in").mkdir()
    (root / "out").mkdir()
    fixtures = {
        "coop.ode": COOP_PAIR,
        "lw.ode": LAMBDA_OMEGA,
        "chain.ode": CHAIN3,
        "negloop.ode": NEG_LOOP_PAIR,
        "bothminus.ode": _BOTH_MINUS,
        "cubic.ode": _CUBIC,
    }
    for name, text in fixtures.items():
        (root / "in" / name).write_text(text + "\n")
    (root / "in" / "twoloop.json").write_text(json.dumps({
        "n": 2,
        "edges": [{"from": 1, "to": 2, "sign": "+"},
                  {"from": 2, "to": 1, "sign": "+"}],
    }))
    here = os.getcwd()
    os.chdir(root)
    try:
        for name, want_code, argv in _CLI_SUITE:
            code = cli_main(argv + ["--seed", "42"])
            assert code == want_code, (name, code)
    finally:
        os.chdir(here)
    outdir = root / "out"
    return {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}


def test_09_determinism(tmp_path, capsys):
    run_a = _run_cli_suite(tmp_path / "a")
    run_b = _run_cli_suite(tmp_path / "b")
    capsys.readouterr()  # swallow early-stop notes, keep the report line clean
    assert set(run_a) == set(run_b) == {name for name, _, _ in _CLI_SUITE}
    differing = [name for name in run_a if run_a[name] != run_b[name]]
    ok = not differing
    _report(9, "determinism", ok,
            f"{len(run_a)} reports byte-compared, differing: {differing}")
    assert differing == []
