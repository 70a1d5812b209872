"""Command-line front end.

Eight subcommands over two input formats (ODE text and graph JSON).
Verdicts go in the payload; exit codes only distinguish failure modes:
0 success, 2 unreadable or unparseable input, 3 analysis failure,
4 incoherent system where coherence is required (witness in payload),
5 integration failure.  Reports are canonical JSON (sorted keys, 17
significant digits) so identical inputs and seeds give identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import replace

import numpy as np

from .cascade import (
    IncoherentSystemError,
    apply_change,
    decompose,
    decomposition_to_obj,
    plan_transform,
)
from .dsl import ParseError, emit_system, parse_system
from .dynamics import (
    IntegrationError,
    SimOptions,
    accessibility,
    check_monotone,
    check_semiconjugacy,
    check_unordered_omega,
    estimate_omega_limit,
    find_equilibria,
    integrate,
)
from .graph import (
    Loop,
    LoopBudgetError,
    build_interaction_graph,
    classify,
    graph_from_obj,
)
from .reportio import canonical_json, float_text, write_text
from .spin import SpinFailure, find_consistent_spin
from .system import EvaluationError, SignOptions, eval_field, sign_analysis

__all__ = ["main"]

_TOL_NAMES = {f.name for f in dataclasses.fields(SimOptions)}
_INT_TOLS = {"max_steps", "seed"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _extract_tol(argv: list[str]) -> tuple[dict, list[str]]:
    """Pull --tol.<name> overrides out of argv before argparse sees them."""
    overrides: dict[str, float | int] = {}
    rest: list[str] = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--tol."):
            body = arg[len("--tol."):]
            if "=" in body:
                name, value = body.split("=", 1)
            else:
                name = body
                i += 1
                if i >= len(argv):
                    raise CliError(2, f"missing value for --tol.{name}")
                value = argv[i]
            if name not in _TOL_NAMES:
                raise CliError(2, f"unknown tolerance --tol.{name} "
                                  f"(known: {', '.join(sorted(_TOL_NAMES))})")
            try:
                overrides[name] = (int(value) if name in _INT_TOLS
                                   else float(value))
            except ValueError:
                raise CliError(2, f"invalid value for --tol.{name}: {value!r}")
        else:
            rest.append(arg)
        i += 1
    return overrides, rest


_COMMANDS = {
    "analyze": "interaction graph, classification, and per-edge evidence",
    "spin": "consistent spin assignment or witness loop",
    "decompose": "cascade decomposition of a coherent system",
    "transform": "re-emit the system after the planned change of variables",
    "simulate": "integrate from --x0 and print the trajectory",
    "omega": "estimate the omega limit set from --x0",
    "verify": "run the monotone-dynamics property checks",
    "equilibria": "locate equilibria by Newton multistart",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signflow",
        description="Structure analysis of interaction graphs of ODE systems.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    for name, blurb in _COMMANDS.items():
        sp = sub.add_parser(name, help=blurb)
        sp.add_argument("--input", required=True,
                        help="system (.ode) or graph (.json) file")
        sp.add_argument("--format", choices=("ode", "graph"),
                        help="input format; default guessed from extension")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--x0", help="comma-separated initial state")
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--rtol", type=float)
        if name == "simulate":
            mode = sp.add_mutually_exclusive_group()
            mode.add_argument("--csv", action="store_true",
                              help="CSV trajectory output (default)")
            mode.add_argument("--json", action="store_true",
                              help="JSON report instead of CSV")
        else:
            sp.add_argument("--json", action="store_true",
                            help="JSON output (default for most commands)")
    return parser


def _effective_options(args, overrides: dict) -> SimOptions:
    values: dict = {"seed": args.seed}
    if args.t_end is not None:
        values["t_end"] = args.t_end
    if args.dt is not None:
        values["dt"] = args.dt
    if args.rtol is not None:
        values["rtol"] = args.rtol
    values.update(overrides)
    try:
        return replace(SimOptions(), **values)
    except (TypeError, ValueError) as err:
        raise CliError(2, f"bad options: {err}")


def _input_format(args) -> str:
    if args.format:
        return args.format
    return "graph" if args.input.endswith(".json") else "ode"


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as err:
        raise CliError(2, str(err))


def _load_system(args):
    if _input_format(args) != "ode":
        raise CliError(2, f"{args.command} requires an ode input")
    return parse_system(_read(args.input))


def _load_graph(args, opts: SimOptions):
    """The interaction graph, from either input format."""
    if _input_format(args) == "graph":
        try:
            obj = json.loads(_read(args.input))
        except json.JSONDecodeError as err:
            raise CliError(2, f"invalid graph JSON: {err}")
        try:
            return graph_from_obj(obj), None
        except ValueError as err:
            raise CliError(2, f"invalid graph JSON: {err}")
    s = parse_system(_read(args.input))
    sopts = SignOptions(seed=opts.seed)
    analysis = sign_analysis(s, sopts)
    return build_interaction_graph(s, sopts, analysis), analysis


def _parse_x0(args, n: int) -> np.ndarray:
    if not args.x0:
        raise CliError(2, f"--x0 is required for {args.command}")
    try:
        vec = np.array([float(tok) for tok in args.x0.split(",")])
    except ValueError:
        raise CliError(2, f"invalid --x0: {args.x0!r}")
    if len(vec) != n:
        raise CliError(2, f"--x0 must have {n} components, got {len(vec)}")
    return vec


def _config(args, opts: SimOptions, x0=None) -> dict:
    return {
        "command": args.command,
        "input": args.input,
        "format": _input_format(args),
        "out": args.out,
        "x0": None if x0 is None else [float(v) for v in x0],
        "options": opts.as_dict(),
    }


def _loop_obj(loop: Loop) -> list[dict]:
    return [{"from": u, "to": v, "sign": lab.value} for (u, v, lab) in loop.edges]


def _failure_obj(failure: SpinFailure) -> dict:
    return {"reason": failure.reason, "loop": _loop_obj(failure.loop)}


# -- command handlers ---------------------------------------------------------


def _cmd_analyze(args, opts: SimOptions):
    g, analysis = _load_graph(args, opts)
    edges = []
    for (u, v, lab) in g.edges():
        entry: dict = {"from": u, "to": v, "sign": lab.value}
        if analysis is not None:
            ev = analysis[(v, u)].evidence
            entry["stage"] = ev.kind
            if ev.bounds is not None:
                entry["bounds"] = list(ev.bounds)
            if ev.witness_pos is not None:
                entry["witness_pos"] = {"point": list(ev.witness_pos[0]),
                                        "value": ev.witness_pos[1]}
            if ev.witness_neg is not None:
                entry["witness_neg"] = {"point": list(ev.witness_neg[0]),
                                        "value": ev.witness_neg[1]}
            if ev.note:
                entry["note"] = ev.note
        edges.append(entry)
    verdict = classify(g)
    payload = {
        "config": _config(args, opts),
        "n": g.n,
        "edges": edges,
        "classification": verdict.klass.value,
        "witness": _loop_obj(verdict.witness) if verdict.witness else None,
    }
    return 0, canonical_json(payload)


def _cmd_spin(args, opts: SimOptions):
    g, _ = _load_graph(args, opts)
    result = find_consistent_spin(g)
    if isinstance(result, SpinFailure):
        payload = {"config": _config(args, opts),
                   "failure": _failure_obj(result)}
        return 4, canonical_json(payload)
    payload = {"config": _config(args, opts),
               "sigma": {str(v): s for v, s in result.as_dict().items()}}
    return 0, canonical_json(payload)


def _cmd_decompose(args, opts: SimOptions):
    s = _load_system(args)
    sopts = SignOptions(seed=opts.seed)
    g = build_interaction_graph(s, sopts)
    try:
        d = decompose(s, graph=g)
    except IncoherentSystemError as err:
        payload = {"config": _config(args, opts),
                   "failure": _failure_obj(err.failure)}
        return 4, canonical_json(payload)
    payload = decomposition_to_obj(d)
    payload["config"] = _config(args, opts)
    payload["dsl"] = emit_system(d.system)
    return 0, canonical_json(payload)


def _cmd_transform(args, opts: SimOptions):
    s = _load_system(args)
    sopts = SignOptions(seed=opts.seed)
    g = build_interaction_graph(s, sopts)
    try:
        change = plan_transform(g)
    except IncoherentSystemError as err:
        payload = {"config": _config(args, opts),
                   "failure": _failure_obj(err.failure)}
        return 4, canonical_json(payload)
    transformed = apply_change(s, change)
    text = emit_system(transformed)
    if args.json:
        payload = {"config": _config(args, opts),
                   "perm": list(change.perm),
                   "rho": list(change.rho),
                   "dsl": text}
        return 0, canonical_json(payload)
    return 0, text


def _csv_trajectory(traj) -> str:
    n = traj.states.shape[1]
    lines = ["t," + ",".join(f"x{i}" for i in range(1, n + 1))]
    for t, row in zip(traj.times, traj.states):
        lines.append(",".join([float_text(t)] + [float_text(v) for v in row]))
    return "\n".join(lines) + "\n"


def _cmd_simulate(args, opts: SimOptions):
    s = _load_system(args)
    x0 = _parse_x0(args, s.n)
    traj = integrate(s, x0, opts=opts)
    if not traj.completed:
        print(f"note: integration stopped early ({traj.terminated_by}) "
              f"at t = {traj.t_stop:.6g}", file=sys.stderr)
    if args.json:
        payload = {
            "config": _config(args, opts, x0),
            "terminated_by": traj.terminated_by,
            "t_stop": traj.t_stop,
            "times": [float(t) for t in traj.times],
            "states": traj.states,
        }
        return 0, canonical_json(payload)
    return 0, _csv_trajectory(traj)


def _cmd_omega(args, opts: SimOptions):
    s = _load_system(args)
    x0 = _parse_x0(args, s.n)
    est = estimate_omega_limit(s, x0, opts)
    payload = {
        "config": _config(args, opts, x0),
        "verdict": est.verdict,
        "point": None if est.point is None else list(est.point),
        "period": est.period,
        "samples": None if est.samples is None else est.samples,
        "diagnostics": est.diagnostics,
    }
    return 0, canonical_json(payload)


def _cmd_equilibria(args, opts: SimOptions):
    s = _load_system(args)
    points = find_equilibria(s, opts)
    residuals = [float(np.max(np.abs(eval_field(s, p)))) for p in points]
    access = []
    for p in points:
        try:
            a = accessibility(s.domain, p)
            access.append({"above": a.above, "below": a.below})
        except ValueError:
            access.append(None)
    payload = {
        "config": _config(args, opts),
        "count": len(points),
        "equilibria": [list(map(float, p)) for p in points],
        "residuals": residuals,
        "accessibility": access,
    }
    return 0, canonical_json(payload)


def _cmd_verify(args, opts: SimOptions):
    s = _load_system(args)
    sopts = SignOptions(seed=opts.seed)
    analysis = sign_analysis(s, sopts)
    g = build_interaction_graph(s, sopts, analysis)
    klass = classify(g)

    mon = check_monotone(s, n_pairs=20, tol=1e-7, opts=opts)
    checks: dict = {
        "monotone": {
            "passed": mon.passed,
            "checked": mon.checked,
            "skipped": list(mon.skipped),
            "violations": [
                {"pair": v.pair_index, "t": v.t,
                 "coordinate": v.coordinate, "gap": v.gap}
                for v in mon.violations
            ],
            "tol": mon.tol,
        }
    }

    try:
        d = decompose(s, graph=g)
        semi = check_semiconjugacy(None, d, n_points=10, opts=opts)
        checks["semiconjugacy"] = {
            "passed": semi.passed,
            "checked": semi.checked,
            "max_deviation": semi.max_deviation,
            "skipped": list(semi.skipped),
            "tol": semi.tol,
        }
        semi_ok = semi.passed
    except IncoherentSystemError:
        checks["semiconjugacy"] = {"skipped": "system is incoherent"}
        semi_ok = True

    window = s.domain.shrunk(opts.sample_radius)
    lo = np.array([iv.lo for iv in window])
    hi = np.array([iv.hi for iv in window])
    rng = np.random.default_rng(opts.seed)
    starts = rng.uniform(lo, hi, size=(3, s.n))
    unordered = []
    unordered_ok = True
    for x0 in starts:
        entry: dict = {"x0": [float(v) for v in x0], "pair": None,
                       "passed": None}
        try:
            est = estimate_omega_limit(s, x0, opts)
        except IntegrationError as err:
            entry["verdict"] = f"error: {err}"
            unordered.append(entry)
            continue
        entry["verdict"] = est.verdict
        pts = None
        if est.verdict == "Equilibrium":
            pts = [est.point]
        elif est.verdict == "Cycle":
            pts = list(est.samples)
        if pts is not None:
            rep = check_unordered_omega(pts, margin=1e-6)
            entry["passed"] = rep.passed
            entry["pair"] = None if rep.pair is None else list(rep.pair)
            if not rep.passed:
                unordered_ok = False
        unordered.append(entry)
    checks["unordered_omega"] = unordered

    payload = {
        "config": _config(args, opts),
        "classification": klass.klass.value,
        "checks": checks,
        "passed": bool(mon.passed and semi_ok and unordered_ok),
    }
    return 0, canonical_json(payload)


_HANDLERS = {
    "analyze": _cmd_analyze,
    "spin": _cmd_spin,
    "decompose": _cmd_decompose,
    "transform": _cmd_transform,
    "simulate": _cmd_simulate,
    "omega": _cmd_omega,
    "verify": _cmd_verify,
    "equilibria": _cmd_equilibria,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else [str(a) for a in argv]
    try:
        overrides, rest = _extract_tol(argv)
    except CliError as err:
        print(f"error: {err.message}", file=sys.stderr)
        return err.code

    parser = _build_parser()
    try:
        args = parser.parse_args(rest)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        opts = _effective_options(args, overrides)
        code, text = _HANDLERS[args.command](args, opts)
    except CliError as err:
        print(f"error: {err.message}", file=sys.stderr)
        return err.code
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except IntegrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 5
    except IncoherentSystemError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except (EvaluationError, LoopBudgetError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3

    if text is not None:
        write_text(args.out, text)
    return code


if __name__ == "__main__":
    sys.exit(main())
