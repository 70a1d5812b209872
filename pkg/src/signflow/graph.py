"""Sign-labelled interaction graphs and their structural classification.

Vertices are coordinates 1..n; a directed edge (j, i) records that
coordinate j influences equation i, labelled ``+``, ``-`` or ``?`` (the
partial derivative is nonnegative everywhere, nonpositive everywhere, or
genuinely sign-varying/ambiguous).  Self-edges are excluded throughout:
diagonal terms carry no loop information at this level.

The classification chain is

    cooperative  =>  quasicooperative  =>  coherent

where cooperative means every edge is ``+``, quasicooperative means every
loop edge (edge whose endpoints share a strongly connected component) is
``+``, and coherent means every loop has unambiguous labels multiplying
to ``+``.  An incoherent verdict always carries a witness loop.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .system import Sign, SignOptions, SystemDef, sign_analysis

__all__ = [
    "SignLabel",
    "label_mul",
    "InteractionGraph",
    "Loop",
    "LoopBudgetError",
    "GraphClass",
    "ClassVerdict",
    "Subgraph",
    "SubgraphPredicates",
    "scc",
    "condensation",
    "loop_edges",
    "enumerate_simple_loops",
    "classify",
    "subgraph_predicates",
    "fundamental_subgraphs",
    "source_components",
    "directed_path",
    "build_interaction_graph",
    "graph_to_obj",
    "graph_from_obj",
]


class SignLabel(enum.Enum):
    PLUS = "+"
    MINUS = "-"
    THETA = "?"


def label_mul(a: SignLabel, b: SignLabel) -> SignLabel:
    """Label product; ambiguity is absorbing."""
    if a is SignLabel.THETA or b is SignLabel.THETA:
        return SignLabel.THETA
    if a is b:
        return SignLabel.PLUS
    return SignLabel.MINUS


class InteractionGraph:
    """Immutable-by-convention labelled digraph without self-edges."""

    __slots__ = ("n", "_labels", "_succ", "_pred")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, SignLabel]]):
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        self.n = n
        labels: dict[tuple[int, int], SignLabel] = {}
        succ: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        pred: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        for u, v, lab in edges:
            if not (1 <= u <= n and 1 <= v <= n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise ValueError(f"self-edge at vertex {u}")
            if (u, v) in labels:
                raise ValueError(f"duplicate edge ({u}, {v})")
            if not isinstance(lab, SignLabel):
                raise ValueError(f"bad label {lab!r}")
            labels[(u, v)] = lab
            succ[u].append(v)
            pred[v].append(u)
        self._labels = labels
        self._succ = {v: tuple(sorted(ws)) for v, ws in succ.items()}
        self._pred = {v: tuple(sorted(ws)) for v, ws in pred.items()}

    def edges(self) -> list[tuple[int, int, SignLabel]]:
        return [(u, v, self._labels[(u, v)]) for (u, v) in sorted(self._labels)]

    def edge_pairs(self) -> list[tuple[int, int]]:
        return sorted(self._labels)

    def label(self, u: int, v: int) -> SignLabel:
        return self._labels[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._labels

    def successors(self, u: int) -> tuple[int, ...]:
        return self._succ[u]

    def predecessors(self, v: int) -> tuple[int, ...]:
        return self._pred[v]

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def __eq__(self, other) -> bool:
        return (isinstance(other, InteractionGraph)
                and self.n == other.n and self._labels == other._labels)

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._labels.items())))

    def __repr__(self) -> str:
        es = ", ".join(f"{u}->{v}:{lab.value}" for u, v, lab in self.edges())
        return f"InteractionGraph(n={self.n}, [{es}])"


@dataclass(frozen=True)
class Loop:
    """A directed cycle given as its edge sequence (consecutive, closed)."""

    edges: tuple[tuple[int, int, SignLabel], ...]

    def __post_init__(self):
        if len(self.edges) < 2:
            raise ValueError("loops have length at least 2")
        for (a, b, _), (c, _d, _l) in zip(self.edges, self.edges[1:]):
            if b != c:
                raise ValueError("edges do not chain")
        if self.edges[-1][1] != self.edges[0][0]:
            raise ValueError("loop is not closed")

    @property
    def sign(self) -> SignLabel:
        out = SignLabel.PLUS
        for _u, _v, lab in self.edges:
            out = label_mul(out, lab)
        return out

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(u for u, _v, _l in self.edges)


class LoopBudgetError(RuntimeError):
    """Loop enumeration exceeded its configured cycle budget."""


def _tarjan(vertices: Sequence[int], succ) -> list[list[int]]:
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in sorted(vertices):
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work: list[tuple[int, Iterator[int]]] = [(root, iter(succ(root)))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def scc(g: InteractionGraph) -> list[list[int]]:
    """Strongly connected components, ordered by smallest contained vertex."""
    return _tarjan(list(g.vertices), g.successors)


def condensation(g: InteractionGraph) -> tuple[list[list[int]], set[tuple[int, int]]]:
    """Components plus the edge set of the condensation DAG (index pairs)."""
    comps = scc(g)
    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    dag = set()
    for u, v, _lab in g.edges():
        cu, cv = comp_of[u], comp_of[v]
        if cu != cv:
            dag.add((cu, cv))
    return comps, dag


def loop_edges(g: InteractionGraph) -> frozenset[tuple[int, int]]:
    """Edges lying on some directed loop: endpoints share a component."""
    comps = scc(g)
    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    return frozenset((u, v) for (u, v) in g.edge_pairs()
                     if comp_of[u] == comp_of[v])


def enumerate_simple_loops(g: InteractionGraph, max_len: int | None = None,
                           cap: int = 200_000) -> list[Loop]:
    """All simple directed loops with at most ``max_len`` edges.

    Each loop is reported once, rooted at its smallest vertex.  Raises
    :class:`LoopBudgetError` if more than ``cap`` loops are found.
    """
    limit = max_len if max_len is not None else g.n
    loops: list[Loop] = []

    def dfs(start: int, v: int, path: list[tuple[int, int, SignLabel]],
            on_path: set[int]) -> None:
        for w in g.successors(v):
            if w == start:
                loops.append(Loop(tuple(path + [(v, w, g.label(v, w))])))
                if len(loops) > cap:
                    raise LoopBudgetError(f"more than {cap} loops")
            elif w > start and w not in on_path and len(path) + 1 < limit:
                on_path.add(w)
                path.append((v, w, g.label(v, w)))
                dfs(start, w, path, on_path)
                path.pop()
                on_path.discard(w)

    if limit >= 2:
        for s in g.vertices:
            dfs(s, s, [], {s})
    return loops


class GraphClass(enum.Enum):
    COOPERATIVE = "cooperative"
    QUASICOOPERATIVE = "quasicooperative"
    COHERENT = "coherent"
    INCOHERENT = "incoherent"


@dataclass(frozen=True)
class ClassVerdict:
    klass: GraphClass
    witness: Loop | None = None


def classify(g: InteractionGraph) -> ClassVerdict:
    """Strongest class in the cooperative => quasicooperative => coherent
    chain, or incoherent with a witness loop whose labels multiply to
    ``-`` or contain ``?``."""
    labels = [lab for _u, _v, lab in g.edges()]
    if all(lab is SignLabel.PLUS for lab in labels):
        return ClassVerdict(GraphClass.COOPERATIVE)
    le = loop_edges(g)
    if all(g.label(u, v) is SignLabel.PLUS for (u, v) in le):
        return ClassVerdict(GraphClass.QUASICOOPERATIVE)
    from .spin import SpinFailure, find_consistent_spin

    res = find_consistent_spin(g)
    if isinstance(res, SpinFailure):
        return ClassVerdict(GraphClass.INCOHERENT, witness=res.loop)
    return ClassVerdict(GraphClass.COHERENT)


@dataclass(frozen=True)
class Subgraph:
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", frozenset(self.edges))
        if not self.vertices:
            raise ValueError("subgraphs have a nonempty vertex set")

    def min_vertex(self) -> int:
        return min(self.vertices)


@dataclass(frozen=True)
class SubgraphPredicates:
    full: bool
    initial: bool
    terminal: bool
    primary: bool
    connected: bool
    strongly_connected: bool


def _validate_subgraph(g: InteractionGraph, s: Subgraph) -> None:
    for v in s.vertices:
        if not (1 <= v <= g.n):
            raise ValueError(f"vertex {v} not in the parent graph")
    for (u, v) in s.edges:
        if u not in s.vertices or v not in s.vertices:
            raise ValueError(f"edge ({u}, {v}) leaves the vertex set")
        if not g.has_edge(u, v):
            raise ValueError(f"edge ({u}, {v}) not in the parent graph")


def subgraph_predicates(g: InteractionGraph, s: Subgraph) -> SubgraphPredicates:
    """Evaluate the structural predicates of ``s`` inside ``g`` literally."""
    _validate_subgraph(g, s)
    vs, es = s.vertices, s.edges

    full = all((u, v) in es
               for (u, v) in g.edge_pairs() if u in vs and v in vs)
    initial = not any(v in vs and u not in vs for (u, v) in g.edge_pairs())
    terminal = not any(u in vs and v not in vs for (u, v) in g.edge_pairs())

    # Undirected connectivity over the subgraph's own edges.
    adj: dict[int, set[int]] = {v: set() for v in vs}
    for (u, v) in es:
        adj[u].add(v)
        adj[v].add(u)
    seen = {min(vs)}
    queue = deque(seen)
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    connected = seen == vs

    sub_succ: dict[int, list[int]] = {v: [] for v in vs}
    for (u, v) in sorted(es):
        sub_succ[u].append(v)
    comps = _tarjan(sorted(vs), lambda v: sub_succ[v])
    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    strongly_connected = len(comps) == 1
    primary = all(comp_of[u] == comp_of[v] for (u, v) in es)

    return SubgraphPredicates(full=full, initial=initial, terminal=terminal,
                              primary=primary, connected=connected,
                              strongly_connected=strongly_connected)


def _full_subgraph(g: InteractionGraph, vertices: Iterable[int]) -> Subgraph:
    vs = frozenset(vertices)
    es = frozenset((u, v) for (u, v) in g.edge_pairs() if u in vs and v in vs)
    return Subgraph(vs, es)


def fundamental_subgraphs(g: InteractionGraph) -> list[Subgraph]:
    """Full subgraphs on the source components of the condensation.

    These are exactly the maximal connected primary initial subgraphs,
    pairwise disjoint, ordered by smallest contained vertex.
    """
    comps, dag = condensation(g)
    has_incoming = {j for (_i, j) in dag}
    out = [_full_subgraph(g, comp)
           for i, comp in enumerate(comps) if i not in has_incoming]
    out.sort(key=lambda s: s.min_vertex())
    return out


def source_components(g: InteractionGraph, vertices: Iterable[int]
                      ) -> list[list[int]]:
    """Source components of the condensation of the induced subgraph."""
    vs = set(vertices)
    succ = {v: tuple(w for w in g.successors(v) if w in vs) for v in vs}
    comps = _tarjan(sorted(vs), lambda v: succ[v])
    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    has_incoming = set()
    for u in vs:
        for w in succ[u]:
            if comp_of[u] != comp_of[w]:
                has_incoming.add(comp_of[w])
    return [comp for i, comp in enumerate(comps) if i not in has_incoming]


def directed_path(g: InteractionGraph, a: int, b: int,
                  within: Iterable[int]) -> list[tuple[int, int, SignLabel]]:
    """Shortest directed path a -> b through ``within`` (BFS, smallest
    successor explored first, so the result is deterministic)."""
    allowed = set(within)
    if a not in allowed or b not in allowed:
        raise ValueError("endpoints must lie in the allowed set")
    parent: dict[int, int] = {a: a}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            break
        for w in g.successors(u):
            if w in allowed and w not in parent:
                parent[w] = u
                queue.append(w)
    if b not in parent:
        raise ValueError(f"no directed path {a} -> {b}")
    rev = []
    v = b
    while v != a:
        u = parent[v]
        rev.append((u, v, g.label(u, v)))
        v = u
    return rev[::-1]


_SIGN_TO_LABEL = {
    Sign.PLUS: SignLabel.PLUS,
    Sign.MINUS: SignLabel.MINUS,
    Sign.THETA: SignLabel.THETA,
}


def build_interaction_graph(s: SystemDef, opts: SignOptions | None = None,
                            analysis: Mapping | None = None) -> InteractionGraph:
    """Interaction graph of a system from its off-diagonal partial signs.

    ``analysis`` may supply a precomputed :func:`sign_analysis` result to
    avoid repeating the symbolic work.
    """
    verdicts = analysis if analysis is not None else sign_analysis(s, opts)
    edges = []
    for (i, j), verdict in sorted(verdicts.items()):
        if verdict.sign is Sign.ZERO:
            continue
        edges.append((j, i, _SIGN_TO_LABEL[verdict.sign]))
    return InteractionGraph(s.n, edges)


def graph_to_obj(g: InteractionGraph) -> dict:
    return {
        "n": g.n,
        "edges": [{"from": u, "to": v, "sign": lab.value}
                  for (u, v, lab) in g.edges()],
    }


def graph_from_obj(obj) -> InteractionGraph:
    if not isinstance(obj, dict):
        raise ValueError("graph document must be a JSON object")
    n = obj.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError("'n' must be a positive integer")
    raw = obj.get("edges")
    if not isinstance(raw, list):
        raise ValueError("'edges' must be a list")
    edges = []
    by_value = {lab.value: lab for lab in SignLabel}
    for item in raw:
        if not isinstance(item, dict):
            raise ValueError("each edge must be an object")
        try:
            u, v, sgn = item["from"], item["to"], item["sign"]
        except KeyError as exc:
            raise ValueError(f"edge missing field {exc.args[0]!r}") from exc
        if not isinstance(u, int) or not isinstance(v, int):
            raise ValueError("edge endpoints must be integers")
        if sgn not in by_value:
            raise ValueError(f"edge sign must be one of +, -, ?: got {sgn!r}")
        edges.append((u, v, by_value[sgn]))
    return InteractionGraph(n, edges)
