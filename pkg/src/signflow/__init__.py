"""Structure analysis for interaction graphs of ODE systems.

Parse a small ODE description language, extract the signed interaction
graph by symbolic/interval/sampling sign analysis, classify its loop
structure, construct spin assignments and cascade decompositions, and
check the resulting order-theoretic dynamics numerically.
"""

from ._kernel import BACKEND, HAVE_COMPILED
from .cascade import (
    CascadeDecomposition,
    ElementaryChange,
    FibreSystemDef,
    IncoherentSystemError,
    apply_change,
    decompose,
    fibre_system,
    plan_blocks,
    plan_transform,
    top_system,
    transport_graph,
    verify_block_triangular,
)
from .dsl import ParseError, emit_system, parse_system
from .dynamics import (
    Accessibility,
    IntegrationError,
    MonotoneReport,
    OmegaEstimate,
    OrderRelation,
    SemiconjugacyReport,
    SimOptions,
    Trajectory,
    UnorderedOmegaReport,
    accessibility,
    check_monotone,
    check_semiconjugacy,
    check_unordered_omega,
    estimate_omega_limit,
    find_equilibria,
    integrate,
    order_compare,
    propagate_fixed,
)
from .graph import (
    ClassVerdict,
    GraphClass,
    InteractionGraph,
    Loop,
    LoopBudgetError,
    SignLabel,
    Subgraph,
    build_interaction_graph,
    classify,
    condensation,
    enumerate_simple_loops,
    fundamental_subgraphs,
    graph_from_obj,
    graph_to_obj,
    loop_edges,
    scc,
    subgraph_predicates,
)
from .spin import SpinAssignment, SpinFailure, find_consistent_spin, verify_spin
from .system import (
    DomainBox,
    DomainClass,
    EvaluationError,
    Sign,
    SignOptions,
    SignVerdict,
    SystemDef,
    VarInterval,
    eval_field,
    sign_analysis,
    sign_of_partial,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    "HAVE_COMPILED",
    # system definitions and sign analysis
    "SystemDef",
    "DomainBox",
    "DomainClass",
    "VarInterval",
    "Sign",
    "SignOptions",
    "SignVerdict",
    "EvaluationError",
    "eval_field",
    "sign_analysis",
    "sign_of_partial",
    # DSL
    "ParseError",
    "parse_system",
    "emit_system",
    # graphs
    "InteractionGraph",
    "SignLabel",
    "Loop",
    "LoopBudgetError",
    "GraphClass",
    "ClassVerdict",
    "Subgraph",
    "build_interaction_graph",
    "classify",
    "scc",
    "condensation",
    "loop_edges",
    "enumerate_simple_loops",
    "fundamental_subgraphs",
    "subgraph_predicates",
    "graph_to_obj",
    "graph_from_obj",
    # spin
    "SpinAssignment",
    "SpinFailure",
    "find_consistent_spin",
    "verify_spin",
    # cascade
    "ElementaryChange",
    "CascadeDecomposition",
    "FibreSystemDef",
    "IncoherentSystemError",
    "apply_change",
    "transport_graph",
    "plan_blocks",
    "plan_transform",
    "decompose",
    "top_system",
    "fibre_system",
    "verify_block_triangular",
    # dynamics
    "SimOptions",
    "Trajectory",
    "IntegrationError",
    "OmegaEstimate",
    "OrderRelation",
    "MonotoneReport",
    "SemiconjugacyReport",
    "UnorderedOmegaReport",
    "Accessibility",
    "integrate",
    "propagate_fixed",
    "estimate_omega_limit",
    "find_equilibria",
    "check_monotone",
    "check_semiconjugacy",
    "order_compare",
    "check_unordered_omega",
    "accessibility",
]
