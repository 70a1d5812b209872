"""Coordinate changes and cascade decomposition.

An elementary change of variables composes a permutation with per-axis
reflections: ``y_i = rho_i * x_{perm_i}``.  Conjugating a system by such
a change preserves the interaction structure up to relabelling, and for
a coherent system a suitable change makes every loop edge positive while
ordering the coordinates so the right-hand side becomes block
triangular: the first block is self-contained and each later block only
reads earlier ones.  The first block then forms a standalone "top"
system, and freezing it at one of its equilibria leaves a smaller
"fibre" system on the remaining coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .graph import (
    ClassVerdict,
    InteractionGraph,
    SignLabel,
    build_interaction_graph,
    classify,
    fundamental_subgraphs,
    source_components,
)
from .spin import SpinAssignment, SpinFailure, find_consistent_spin
from .system import (
    DomainBox,
    Sign,
    SignOptions,
    SystemDef,
    VarInterval,
    eval_field,
    sign_of_partial,
)

__all__ = [
    "ElementaryChange",
    "IncoherentSystemError",
    "CascadeDecomposition",
    "FibreSystemDef",
    "apply_change",
    "transport_graph",
    "plan_blocks",
    "plan_transform",
    "decompose",
    "top_system",
    "fibre_system",
    "verify_block_triangular",
    "decomposition_to_obj",
]


class IncoherentSystemError(Exception):
    """Raised when a transform requires coherence the graph lacks."""

    def __init__(self, failure: SpinFailure):
        self.failure = failure
        super().__init__(f"system is incoherent: {failure.reason}")


@dataclass(frozen=True)
class ElementaryChange:
    """y_i = rho_i * x_{perm_i}, with perm a permutation of 1..n."""

    perm: tuple[int, ...]
    rho: tuple[int, ...]

    def __post_init__(self):
        n = len(self.perm)
        if len(self.rho) != n:
            raise ValueError("perm and rho must have the same length")
        if sorted(self.perm) != list(range(1, n + 1)):
            raise ValueError("perm is not a permutation of 1..n")
        if any(r not in (-1, 1) for r in self.rho):
            raise ValueError("rho entries must be +1 or -1")

    @property
    def n(self) -> int:
        return len(self.perm)

    @staticmethod
    def identity(n: int) -> "ElementaryChange":
        return ElementaryChange(tuple(range(1, n + 1)), (1,) * n)

    def inverse(self) -> "ElementaryChange":
        inv = [0] * self.n
        for i, j in enumerate(self.perm, start=1):
            inv[j - 1] = i
        rho = tuple(self.rho[inv[j] - 1] for j in range(self.n))
        return ElementaryChange(tuple(inv), rho)

    def apply_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected a point of dimension {self.n}")
        return np.array([r * x[p - 1] for p, r in zip(self.perm, self.rho)])


def apply_change(s: SystemDef, c: ElementaryChange) -> SystemDef:
    """Conjugate the system: the returned G satisfies G = L o F o L^-1."""
    if c.n != s.n:
        raise ValueError("change of variables has wrong dimension")
    inv = c.inverse()
    mapping = {}
    for j in range(1, s.n + 1):
        v: ex.Expr = ex.Var(inv.perm[j - 1])
        if inv.rho[j - 1] == -1:
            v = ex.Neg(v)
        mapping[j] = v
    exprs = []
    intervals = []
    for i in range(1, s.n + 1):
        src = c.perm[i - 1]
        e = ex.substitute(s.exprs[src - 1], mapping)
        if c.rho[i - 1] == -1:
            e = ex.Neg(e)
        exprs.append(ex.simplify(e))
        intervals.append(_reflect(s.domain.intervals[src - 1], c.rho[i - 1]))
    return SystemDef(s.n, tuple(exprs), DomainBox(tuple(intervals)))


def _reflect(iv: VarInterval, rho: int) -> VarInterval:
    if rho == 1:
        return iv
    return VarInterval(-iv.hi, -iv.lo, iv.hi_closed, iv.lo_closed)


def transport_graph(g: InteractionGraph, c: ElementaryChange) -> InteractionGraph:
    """Interaction graph of the conjugated system, by relabelling."""
    if c.n != g.n:
        raise ValueError("change of variables has wrong dimension")
    inv = c.inverse()
    edges = []
    for (u, v, lab) in g.edges():
        a, b = inv.perm[u - 1], inv.perm[v - 1]
        if lab is not SignLabel.THETA and c.rho[a - 1] * c.rho[b - 1] == -1:
            lab = SignLabel.MINUS if lab is SignLabel.PLUS else SignLabel.PLUS
        edges.append((a, b, lab))
    return InteractionGraph(g.n, edges)


def plan_blocks(g: InteractionGraph) -> list[list[int]]:
    """Peel source components off the graph, smallest-vertex block first.

    Returns blocks of original vertex indices whose concatenation is a
    cascade order: every edge runs within a block or from an earlier
    block to a later one.
    """
    remaining = set(g.vertices)
    blocks: list[list[int]] = []
    while remaining:
        sources = source_components(g, remaining)
        block = min(sources, key=min)
        blocks.append(sorted(block))
        remaining -= set(block)
    return blocks


def plan_transform(g: InteractionGraph) -> ElementaryChange:
    """Change of variables making all loop edges positive and moving one
    self-contained block to the front.

    The spins supply the reflections; the permutation puts the
    smallest-vertex fundamental subgraph at positions 1..n1 (ascending
    within) and keeps the remaining vertices in ascending order.  Raises
    IncoherentSystemError when no consistent spin exists.
    """
    spin = find_consistent_spin(g)
    if isinstance(spin, SpinFailure):
        raise IncoherentSystemError(spin)
    first = sorted(fundamental_subgraphs(g)[0].vertices)
    rest = sorted(set(g.vertices) - set(first))
    perm = tuple(first) + tuple(rest)
    rho = tuple(spin.of(p) for p in perm)
    return ElementaryChange(perm, rho)


@dataclass(frozen=True)
class CascadeDecomposition:
    original: SystemDef
    change: ElementaryChange
    system: SystemDef  # conjugated system, block-triangular
    graph: InteractionGraph  # its interaction graph
    spin: SpinAssignment  # spin of the original graph
    blocks: tuple[tuple[int, ...], ...]  # new-coordinate index ranges
    block_verdicts: tuple[ClassVerdict, ...]

    @property
    def n1(self) -> int:
        return len(self.blocks[0])

    @property
    def boundaries(self) -> tuple[int, ...]:
        """Cumulative block boundaries n1 < n2 < ... = n."""
        out = []
        total = 0
        for b in self.blocks:
            total += len(b)
            out.append(total)
        return tuple(out)


def decompose(s: SystemDef,
              graph: InteractionGraph | None = None,
              opts: SignOptions | None = None) -> CascadeDecomposition:
    """Cascade decomposition of a coherent system.

    Conjugates by the planned change so all loop edges become positive
    and coordinates are block-ordered, then classifies each diagonal
    block as a standalone graph.
    """
    g = graph if graph is not None else build_interaction_graph(s, opts)
    spin = find_consistent_spin(g)
    if isinstance(spin, SpinFailure):
        raise IncoherentSystemError(spin)
    old_blocks = plan_blocks(g)
    perm = tuple(v for block in old_blocks for v in block)
    rho = tuple(spin.of(p) for p in perm)
    change = ElementaryChange(perm, rho)

    system = apply_change(s, change)
    h = transport_graph(g, change)

    blocks: list[tuple[int, ...]] = []
    start = 1
    for ob in old_blocks:
        blocks.append(tuple(range(start, start + len(ob))))
        start += len(ob)

    pos = {v: k for k, block in enumerate(blocks) for v in block}
    for (u, v, _lab) in h.edges():
        if pos[u] > pos[v]:
            raise AssertionError("cascade order violated by transported edge")

    verdicts = tuple(classify(_induced(h, block)) for block in blocks)
    return CascadeDecomposition(s, change, system, h, spin,
                                tuple(blocks), verdicts)


def _induced(g: InteractionGraph, block: tuple[int, ...]) -> InteractionGraph:
    index = {v: i for i, v in enumerate(block, start=1)}
    edges = [(index[u], index[v], lab) for (u, v, lab) in g.edges()
             if u in index and v in index]
    return InteractionGraph(len(block), edges)


def top_system(d: CascadeDecomposition) -> SystemDef:
    """The self-contained system on the first block."""
    n1 = d.n1
    for i in range(n1):
        bad = [j for j in ex.free_vars(d.system.exprs[i]) if j > n1]
        if bad:
            raise ValueError(
                f"top block reads later coordinate x{bad[0]}")
    return SystemDef(n1, d.system.exprs[:n1],
                     DomainBox(d.system.domain.intervals[:n1]))


@dataclass(frozen=True)
class FibreSystemDef:
    """Residual system after freezing the top block at an equilibrium."""

    parent: SystemDef  # full transformed system
    p: tuple[float, ...]  # equilibrium of the top system, length n1
    reduced: SystemDef  # standalone system on the remaining coordinates

    @property
    def n1(self) -> int:
        return len(self.p)


def fibre_system(d: CascadeDecomposition, p, tol: float = 1e-9) -> FibreSystemDef:
    """Freeze the first block at equilibrium p, renumbering the rest.

    p must lie in the top system's domain and satisfy |F(p)|_inf <= tol.
    In the reduced system old coordinate x_{n1+k} becomes x_k, so its
    field at z equals components n1+1..n of the parent field at (p, z).
    """
    top = top_system(d)
    p = np.asarray(p, dtype=float)
    if p.shape != (top.n,):
        raise ValueError(f"expected a point of dimension {top.n}")
    if not top.domain.contains(p, tol=tol):
        raise ValueError("fibre base point lies outside the top domain")
    resid = eval_field(top, p)
    worst = float(np.max(np.abs(resid)))
    if worst > tol:
        raise ValueError(
            f"fibre base point is not an equilibrium of the top system "
            f"(max residual {worst:.3e} > {tol:.1e})")

    n1, n = d.n1, d.system.n
    mapping: dict[int, ex.Expr] = {}
    for j in range(1, n1 + 1):
        mapping[j] = ex.Num(float(p[j - 1]))
    for j in range(n1 + 1, n + 1):
        mapping[j] = ex.Var(j - n1)
    exprs = tuple(ex.simplify(ex.substitute(d.system.exprs[i - 1], mapping))
                  for i in range(n1 + 1, n + 1))
    dom = DomainBox(d.system.domain.intervals[n1:])
    reduced = SystemDef(n - n1, exprs, dom)
    return FibreSystemDef(d.system, tuple(float(v) for v in p), reduced)


def verify_block_triangular(s: SystemDef,
                            n1: int,
                            points: int = 50,
                            tol: float = 1e-12,
                            seed: int = 42,
                            opts: SignOptions | None = None) -> bool:
    """True iff the first n1 coordinates never read the later ones.

    Requires sign_of_partial(s, i, j) = Zero for every i <= n1 < j, and
    additionally samples numeric Jacobians at interior points, requiring
    |entry| <= tol throughout the forbidden block.
    """
    if not 1 <= n1 < s.n:
        raise ValueError("n1 must satisfy 1 <= n1 < n")
    for i in range(1, n1 + 1):
        for j in range(n1 + 1, s.n + 1):
            if sign_of_partial(s, i, j, opts).sign is not Sign.ZERO:
                return False
    box = s.domain.analysis_box()
    rng = np.random.default_rng(seed)
    samples = np.empty((points, s.n))
    for j, iv in enumerate(box):
        samples[:, j] = rng.uniform(iv.lo, iv.hi, size=points)
    for row in samples:
        for j in range(n1 + 1, s.n + 1):
            h = 1e-6 * (1.0 + abs(row[j - 1]))
            up = row.copy()
            dn = row.copy()
            up[j - 1] += h
            dn[j - 1] -= h
            try:
                diff = eval_field(s, up)[:n1] - eval_field(s, dn)[:n1]
            except Exception:
                continue
            if np.max(np.abs(diff)) / (2.0 * h) > tol:
                return False
    return True


def decomposition_to_obj(d: CascadeDecomposition) -> dict:
    return {
        "perm": list(d.change.perm),
        "rho": list(d.change.rho),
        "blocks": [list(b) for b in d.blocks],
        "n1": d.n1,
        "classes": [v.klass.value for v in d.block_verdicts],
    }
