"""Numerical integration and long-run behavior estimation.

Everything here is deliberately non-rigorous: trajectories come from an
adaptive Runge-Kutta pair, and the omega-limit estimator reports what it
saw (an equilibrium residual, a recurring near-return, a norm blowup)
together with the tolerances that produced the verdict.  All tolerances
live in SimOptions so runs are reproducible and overridable; a fixed
seed makes every sampled check deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._kernel import (
    STATUS_BLOWUP,
    STATUS_DOMAIN_EXIT,
    STATUS_FAILED,
    compile_system,
    make_kernel,
)
from .cascade import CascadeDecomposition, top_system
from .system import DomainClass, DomainBox, SystemDef

__all__ = [
    "SimOptions",
    "IntegrationError",
    "Trajectory",
    "OmegaEstimate",
    "OrderRelation",
    "MonotoneReport",
    "MonotoneViolation",
    "SemiconjugacyReport",
    "UnorderedOmegaReport",
    "Accessibility",
    "integrate",
    "estimate_omega_limit",
    "find_equilibria",
    "check_monotone",
    "check_semiconjugacy",
    "order_compare",
    "check_unordered_omega",
    "accessibility",
    "propagate_fixed",
]


@dataclass(frozen=True)
class SimOptions:
    """Integration and verdict tolerances.

    The qualitative theory gives no numbers; these are artifact choices,
    all overridable from the CLI, and every report embeds the values in
    effect.
    """

    t_end: float = 500.0
    dt: float = 0.1
    rtol: float = 1e-8
    atol: float = 1e-10
    blowup: float = 1e8
    boundary_tol: float = 1e-9
    max_steps: int = 10_000_000
    eq_tol: float = 1e-9
    drift_tol: float = 1e-7
    cyc_tol: float = 1e-4
    min_speed: float = 1e-6
    eq_cluster_tol: float = 1e-6
    sample_radius: float = 3.0
    seed: int = 42

    def as_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "dt": self.dt,
            "rtol": self.rtol,
            "atol": self.atol,
            "blowup": self.blowup,
            "boundary_tol": self.boundary_tol,
            "max_steps": self.max_steps,
            "eq_tol": self.eq_tol,
            "drift_tol": self.drift_tol,
            "cyc_tol": self.cyc_tol,
            "min_speed": self.min_speed,
            "eq_cluster_tol": self.eq_cluster_tol,
            "sample_radius": self.sample_radius,
            "seed": self.seed,
        }


DEFAULTS = SimOptions()

_STATUS_NAMES = {
    STATUS_BLOWUP: "blow_up",
    STATUS_DOMAIN_EXIT: "domain_exit",
}


class IntegrationError(RuntimeError):
    """Hard integration failure: bad initial state, non-finite field, or
    step-size collapse."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray  # recorded sample times, strictly increasing
    states: np.ndarray  # one row per sample
    terminated_by: str  # "t_end" | "blow_up" | "domain_exit"
    t_stop: float  # where integration actually stopped
    x_stop: np.ndarray  # last accepted state (may exceed the box)

    @property
    def completed(self) -> bool:
        return self.terminated_by == "t_end"


def _sample_grid(t_end: float, dt: float) -> np.ndarray:
    if not (math.isfinite(t_end) and t_end > 0):
        raise ValueError("t_end must be positive and finite")
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError("dt must be positive and finite")
    segments = max(1, int(round(t_end / dt)))
    return np.linspace(0.0, t_end, segments + 1)


def _box_arrays(domain: DomainBox) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([iv.lo for iv in domain.intervals])
    hi = np.array([iv.hi for iv in domain.intervals])
    return lo, hi


def integrate(s: SystemDef, x0, t_end: float | None = None,
              opts: SimOptions | None = None, *,
              dt: float | None = None,
              times=None, kernel=None) -> Trajectory:
    """Integrate x' = F(x) from x0, recording states on a uniform grid.

    ``times`` overrides the grid (must start at 0, strictly increasing).
    Stops early with terminated_by = "blow_up" when |x|_inf exceeds
    opts.blowup, or "domain_exit" when the state leaves the closed box
    by more than opts.boundary_tol.  Raises IntegrationError on invalid
    x0 or when the stepper cannot proceed.
    """
    opts = opts or DEFAULTS
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (s.n,):
        raise IntegrationError(f"initial state must have dimension {s.n}")
    if not np.all(np.isfinite(x0)):
        raise IntegrationError("initial state must be finite")
    if not s.domain.contains(x0, tol=opts.boundary_tol):
        raise IntegrationError("initial state lies outside the domain box")

    if times is None:
        times = _sample_grid(opts.t_end if t_end is None else t_end,
                             opts.dt if dt is None else dt)
    else:
        times = np.asarray(times, dtype=float)
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("sample times must start at 0 and increase")

    if kernel is None:
        kernel = make_kernel(compile_system(s.exprs, s.n))
    lo, hi = _box_arrays(s.domain)
    status, filled, t_stop, x_stop, ys = kernel.integrate(
        x0, times, opts.rtol, opts.atol, opts.blowup,
        lo, hi, opts.boundary_tol, opts.max_steps)
    if status == STATUS_FAILED:
        raise IntegrationError(
            f"integration failed near t = {t_stop:.6g} "
            f"(non-finite field value or step size collapse)", t=t_stop)
    terminated = _STATUS_NAMES.get(status, "t_end")
    return Trajectory(times[:filled], ys[:filled], terminated,
                      float(t_stop), np.asarray(x_stop, dtype=float))


def propagate_fixed(s: SystemDef, x0, t_end: float, nsteps: int) -> np.ndarray:
    """Final state after nsteps equal steps of the fifth-order formula.

    No error control; exists so convergence-order checks can halve the
    step size deterministically.
    """
    kernel = make_kernel(compile_system(s.exprs, s.n))
    x0 = np.asarray(x0, dtype=float)
    return np.asarray(kernel.fixed_steps(x0, t_end / nsteps, nsteps))


# -- omega limit estimation -------------------------------------------------


@dataclass(frozen=True)
class OmegaEstimate:
    verdict: str  # "Equilibrium" | "Cycle" | "Unbounded" | "Unresolved"
    point: tuple[float, ...] | None  # equilibrium location
    period: float | None
    samples: np.ndarray | None  # one cycle's worth of states
    diagnostics: dict


def estimate_omega_limit(s: SystemDef, x0,
                         opts: SimOptions | None = None) -> OmegaEstimate:
    """Integrate long enough to guess the omega limit set of x0.

    Equilibrium requires a small field residual at the final state plus
    negligible drift over the last tenth of the run.  Cycle requires the
    orbit to re-cross a section through the final state at least three
    more times within cyc_tol, with period estimates agreeing to 5% and
    the field never creeping below min_speed along the cycle.  Anything
    else is reported Unresolved with diagnostics rather than guessed.
    """
    opts = opts or DEFAULTS
    kernel = make_kernel(compile_system(s.exprs, s.n))
    traj = integrate(s, x0, opts=opts, kernel=kernel)

    if traj.terminated_by == "blow_up":
        return OmegaEstimate("Unbounded", None, None, None, {
            "t_stop": traj.t_stop,
            "norm": float(np.max(np.abs(traj.x_stop))),
        })
    if traj.terminated_by == "domain_exit":
        return OmegaEstimate("Unresolved", None, None, None, {
            "note": "trajectory left the domain box",
            "t_stop": traj.t_stop,
        })

    x_final = traj.states[-1]
    f_final = kernel.eval(x_final)
    residual = float(np.max(np.abs(f_final)))
    tail = traj.states[int(0.9 * (len(traj.times) - 1)):]
    drift = float(np.max(np.abs(tail - x_final)))
    speed = float(np.linalg.norm(f_final))
    diagnostics = {"residual": residual, "drift": drift, "speed": speed}

    if residual <= opts.eq_tol and drift <= opts.drift_tol:
        return OmegaEstimate("Equilibrium", tuple(float(v) for v in x_final),
                             None, None, diagnostics)

    if speed >= opts.min_speed:
        cycle = _detect_cycle(s, kernel, traj, f_final, opts, diagnostics)
        if cycle is not None:
            return cycle

    return OmegaEstimate("Unresolved", None, None, None, diagnostics)


def _flow(s: SystemDef, kernel, x, tau: float, opts: SimOptions):
    """State after time tau, or None when integration cannot finish."""
    try:
        t = integrate(s, x, opts=opts, kernel=kernel,
                      times=np.array([0.0, tau]))
    except IntegrationError:
        return None
    if not t.completed:
        return None
    return t.states[-1]


def _detect_cycle(s: SystemDef, kernel, traj: Trajectory, f_final,
                  opts: SimOptions, diagnostics: dict):
    """Look for consistent near-returns through a section at the final state."""
    anchor = traj.states[-1]
    normal = np.asarray(f_final) / np.linalg.norm(f_final)
    g = (traj.states - anchor) @ normal

    half = len(g) // 2
    upward = [k for k in range(half, len(g) - 1) if g[k] < 0.0 <= g[k + 1]]
    upward = upward[-60:]  # recent crossings are the converged ones

    hits: list[tuple[float, np.ndarray]] = []
    for k in upward:
        dt_k = float(traj.times[k + 1] - traj.times[k])
        refined = _refine_crossing(s, kernel, traj.states[k], anchor, normal,
                                   dt_k, opts)
        if refined is None:
            continue
        tau, point = refined
        if np.max(np.abs(point - anchor)) <= opts.cyc_tol:
            hits.append((float(traj.times[k]) + tau, point))

    diagnostics["returns"] = len(hits)
    if len(hits) < 4:
        return None

    times = np.array([t for t, _ in hits])
    periods = np.diff(times)
    period = float(np.mean(periods))
    spread = float(np.max(np.abs(periods - period)))
    diagnostics["period_spread"] = spread
    diagnostics["recurrence"] = float(
        max(np.max(np.abs(p - anchor)) for _, p in hits))
    if period <= 0 or spread > 0.05 * period:
        return None

    try:
        loop = integrate(s, anchor, opts=opts, kernel=kernel,
                         times=np.linspace(0.0, period, 100))
    except IntegrationError:
        return None
    if not loop.completed:
        return None
    speeds = [float(np.linalg.norm(kernel.eval(p))) for p in loop.states]
    if min(speeds) < opts.min_speed:
        return None  # creeping near an equilibrium, not a cycle
    return OmegaEstimate("Cycle", None, period, loop.states, diagnostics)


def _refine_crossing(s: SystemDef, kernel, x_before, anchor, normal,
                     dt: float, opts: SimOptions, iters: int = 50):
    """Bisect the section-crossing time within one sample interval."""
    end = _flow(s, kernel, x_before, dt, opts)
    if end is None or (end - anchor) @ normal < 0.0:
        return None
    lo, hi = 0.0, dt
    point = end
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        state = _flow(s, kernel, x_before, mid, opts) if mid > 0 else x_before
        if state is None:
            return None
        if (state - anchor) @ normal < 0.0:
            lo = mid
        else:
            hi = mid
            point = state
        if hi - lo <= 1e-12 * max(1.0, dt):
            break
    return hi, point


# -- equilibria --------------------------------------------------------------

_GRID_COUNTS = {1: 11, 2: 7, 3: 5, 4: 4, 5: 3, 6: 3}


def find_equilibria(s: SystemDef, opts: SimOptions | None = None) -> list[np.ndarray]:
    """Zeros of the field inside the domain box.

    Damped Newton iterations with a central-difference Jacobian, started
    from a deterministic grid, seeded random points, and the tails of a
    few sample trajectories.  Results are deduplicated within
    eq_cluster_tol and sorted; an empty list means no root was found,
    not that none exists.
    """
    opts = opts or DEFAULTS
    kernel = make_kernel(compile_system(s.exprs, s.n))
    window = s.domain.shrunk(opts.sample_radius)
    lo = np.array([iv.lo for iv in window])
    hi = np.array([iv.hi for iv in window])

    seeds: list[np.ndarray] = []
    count = _GRID_COUNTS.get(s.n, 2)
    axes = [np.linspace(l, h, count + 2)[1:-1] for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    seeds.extend(np.stack([m.ravel() for m in mesh], axis=1))

    rng = np.random.default_rng(opts.seed)
    randoms = rng.uniform(lo, hi, size=(32, s.n))
    seeds.extend(randoms)

    tail_opts = replace(opts, t_end=min(50.0, opts.t_end), dt=1.0)
    for start in randoms[:8]:
        try:
            t = integrate(s, start, opts=tail_opts, kernel=kernel)
        except IntegrationError:
            continue
        if t.completed:
            seeds.append(t.states[-1])

    found: list[np.ndarray] = []
    for seed in seeds:
        root = _newton(kernel, np.asarray(seed, dtype=float), opts.eq_tol)
        if root is None:
            continue
        if not s.domain.contains(root, tol=opts.boundary_tol):
            continue
        found.append(root)

    found.sort(key=tuple)
    reps: list[np.ndarray] = []
    for c in found:
        if all(np.max(np.abs(c - r)) > opts.eq_cluster_tol for r in reps):
            reps.append(c)
    return reps


def _numeric_jacobian(kernel, x: np.ndarray) -> np.ndarray:
    n = len(x)
    jac = np.empty((n, n))
    for j in range(n):
        h = 1e-7 * (1.0 + abs(x[j]))
        up = x.copy()
        dn = x.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (kernel.eval(up) - kernel.eval(dn)) / (2.0 * h)
    return jac


def _newton(kernel, x0: np.ndarray, eq_tol: float,
            max_iter: int = 60) -> np.ndarray | None:
    x = x0.copy()
    f = kernel.eval(x)
    if not np.all(np.isfinite(f)):
        return None
    fnorm = float(np.max(np.abs(f)))
    # Keep polishing past eq_tol until the residual stops improving, so a
    # non-hyperbolic root does not leave a smear of half-converged points.
    for _ in range(max_iter):
        if fnorm == 0.0:
            break
        jac = _numeric_jacobian(kernel, x)
        if not np.all(np.isfinite(jac)):
            break
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        alpha = 1.0
        while alpha >= 1e-6:
            xn = x + alpha * step
            fn = kernel.eval(xn)
            if np.all(np.isfinite(fn)) and np.max(np.abs(fn)) < fnorm:
                x, f = xn, fn
                fnorm = float(np.max(np.abs(fn)))
                break
            alpha *= 0.5
        else:
            break
    return x if fnorm <= eq_tol else None


# -- order and monotonicity checks -------------------------------------------


@dataclass(frozen=True)
class OrderRelation:
    verdict: str  # "Equal" | "GEQ" | "LEQ" | "Incomparable"
    strict_dominance: bool


def order_compare(x, y, margin: float = 0.0) -> OrderRelation:
    """Componentwise comparison in the standard vector order.

    strict_dominance is true when every coordinate differs in the same
    direction by more than margin.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    diff = x - y
    ge = bool(np.all(diff >= 0.0))
    le = bool(np.all(diff <= 0.0))
    if ge and le:
        verdict = "Equal"
    elif ge:
        verdict = "GEQ"
    elif le:
        verdict = "LEQ"
    else:
        verdict = "Incomparable"
    strict = bool(np.min(diff) > margin or np.max(diff) < -margin)
    return OrderRelation(verdict, strict)


@dataclass(frozen=True)
class MonotoneViolation:
    pair_index: int
    t: float
    coordinate: int  # 1-based
    gap: float  # how far below the lower trajectory (positive number)


@dataclass(frozen=True)
class MonotoneReport:
    passed: bool
    checked: int
    skipped: tuple[str, ...]
    violations: tuple[MonotoneViolation, ...]
    tol: float


def check_monotone(s: SystemDef, n_pairs: int = 20, t_grid=None,
                   tol: float = 1e-7,
                   opts: SimOptions | None = None) -> MonotoneReport:
    """Sample ordered initial pairs and test order preservation.

    For each pair x0 >= y0 (componentwise) the two trajectories are
    compared on the grid; any coordinate of the upper falling more than
    tol below the lower is recorded.  Pairs whose integration fails are
    skipped with a note, not counted as violations.
    """
    opts = opts or DEFAULTS
    times = (np.asarray(t_grid, dtype=float) if t_grid is not None
             else _sample_grid(opts.t_end, opts.dt))
    kernel = make_kernel(compile_system(s.exprs, s.n))
    window = s.domain.shrunk(opts.sample_radius)
    lo = np.array([iv.lo for iv in window])
    hi = np.array([iv.hi for iv in window])
    rng = np.random.default_rng(opts.seed)

    checked = 0
    skipped: list[str] = []
    violations: list[MonotoneViolation] = []
    for idx in range(n_pairs):
        lower = rng.uniform(lo, hi)
        upper = np.minimum(lower + rng.uniform(0.0, 0.25 * (hi - lo)), hi)
        try:
            tu = integrate(s, upper, opts=opts, kernel=kernel, times=times)
            tl = integrate(s, lower, opts=opts, kernel=kernel, times=times)
        except IntegrationError as err:
            skipped.append(f"pair {idx}: {err}")
            continue
        m = min(len(tu.times), len(tl.times))
        if m == 0:
            skipped.append(f"pair {idx}: no overlapping samples")
            continue
        checked += 1
        diff = tu.states[:m] - tl.states[:m]
        bad = np.argwhere(diff < -tol)
        if len(bad):
            k, i = bad[np.argmin(diff[bad[:, 0], bad[:, 1]])]
            violations.append(MonotoneViolation(
                idx, float(times[k]), int(i) + 1, float(-diff[k, i])))
    return MonotoneReport(not violations and checked > 0,
                          checked, tuple(skipped), tuple(violations), tol)


@dataclass(frozen=True)
class SemiconjugacyReport:
    passed: bool
    checked: int
    max_deviation: float
    skipped: tuple[str, ...]
    tol: float


def check_semiconjugacy(s: SystemDef | None, d: CascadeDecomposition,
                        n_points: int = 10, t_grid=None, tol: float = 1e-6,
                        opts: SimOptions | None = None) -> SemiconjugacyReport:
    """Compare the projected full flow against the top system's flow.

    Starting points are sampled in the transformed domain; the first n1
    coordinates of the full trajectory must match the top trajectory
    from the projected start within tol at every grid time.
    """
    if s is not None and d.original != s:
        raise ValueError("decomposition does not belong to this system")
    opts = opts or DEFAULTS
    times = (np.asarray(t_grid, dtype=float) if t_grid is not None
             else np.linspace(0.0, 10.0, 101))
    full = d.system
    try:
        top = top_system(d)
    except ValueError as err:
        # The claimed top block is not self-contained: nothing to compare.
        return SemiconjugacyReport(False, 0, math.inf, (str(err),), tol)
    n1 = d.n1
    k_full = make_kernel(compile_system(full.exprs, full.n))
    k_top = make_kernel(compile_system(top.exprs, top.n))

    window = full.domain.shrunk(opts.sample_radius)
    lo = np.array([iv.lo for iv in window])
    hi = np.array([iv.hi for iv in window])
    rng = np.random.default_rng(opts.seed)

    checked = 0
    worst = 0.0
    skipped: list[str] = []
    for idx in range(n_points):
        y0 = rng.uniform(lo, hi)
        try:
            ta = integrate(full, y0, opts=opts, kernel=k_full, times=times)
            tb = integrate(top, y0[:n1], opts=opts, kernel=k_top, times=times)
        except IntegrationError as err:
            skipped.append(f"point {idx}: {err}")
            continue
        m = min(len(ta.times), len(tb.times))
        if m < 2:
            skipped.append(f"point {idx}: no overlapping samples")
            continue
        checked += 1
        worst = max(worst, float(np.max(
            np.abs(ta.states[:m, :n1] - tb.states[:m]))))
    return SemiconjugacyReport(checked > 0 and worst <= tol,
                               checked, worst, tuple(skipped), tol)


@dataclass(frozen=True)
class UnorderedOmegaReport:
    passed: bool
    pair: tuple[int, int] | None  # indices of an offending pair
    margin: float


def check_unordered_omega(points, margin: float = 1e-6) -> UnorderedOmegaReport:
    """No two samples of one omega limit set may strictly dominate."""
    pts = [np.asarray(p, dtype=float) for p in points]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if order_compare(pts[i], pts[j], margin).strict_dominance:
                return UnorderedOmegaReport(False, (i, j), margin)
    return UnorderedOmegaReport(True, None, margin)


@dataclass(frozen=True)
class Accessibility:
    above: bool
    below: bool


def accessibility(domain: DomainBox, p) -> Accessibility:
    """Whether p can be approached from strictly above/below within the box."""
    p = np.asarray(p, dtype=float)
    if p.shape != (len(domain.intervals),):
        raise ValueError("dimension mismatch")
    if not domain.contains(p, tol=0.0):
        raise ValueError("point lies outside the domain box")
    k = domain.klass
    if k in (DomainClass.C1, DomainClass.C2):
        return Accessibility(True, True)
    if k is DomainClass.C3:
        return Accessibility(True, bool(np.all(p > 0.0)))
    if k is DomainClass.C4:
        above = bool(all(p[i] < iv.hi for i, iv in enumerate(domain.intervals)))
        below = bool(all(p[i] > iv.lo for i, iv in enumerate(domain.intervals)))
        return Accessibility(above, below)
    raise ValueError("accessibility rules are undefined for this domain shape")
