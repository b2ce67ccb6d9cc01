"""causalembed: hierarchies embedded in flat spacetime, retrieved causally.

Pipeline: load or generate a child->parent hierarchy, take its transitive
closure, embed every token as a spacetime event (only time coordinates are
learned), then reconstruct chains by walking nearest causal ancestors. A
verify-and-repair loop relocates misaligned children onto almost-null
geodesics until retrieval reproduces the ground truth exactly.
"""

from .embedding import (
    Embedding,
    EmbeddingConfig,
    Event,
    ViolationSet,
    embed,
    enforce_step,
    find_violations,
    init_embedding,
    interval,
    run_sweeps,
)
from .hierarchy import (
    AmbiguityProfile,
    ClosurePairSet,
    HierarchyGraph,
    ParseError,
    StructureError,
    Token,
    ambiguity_profile,
    generate_hierarchy,
    ground_truth_chains,
    load_edge_list,
    transitive_closure,
    write_edge_list,
)
from .metrics import EvalResult, evaluate, rank_of_parent
from .repair import (
    AdjustmentError,
    Mismatch,
    VerificationReport,
    ambiguity_adjust,
    perfect_embed,
    repair_pair,
    verify_all,
)
from .retrieval import (
    CausalCandidate,
    ChainResult,
    ConsistencyError,
    detect_parents,
    nearest_ancestor,
    past_cone,
    retrieve_chain,
)

__version__ = "0.1.0"

__all__ = [
    "AdjustmentError",
    "AmbiguityProfile",
    "CausalCandidate",
    "ChainResult",
    "ClosurePairSet",
    "ConsistencyError",
    "Embedding",
    "EmbeddingConfig",
    "EvalResult",
    "Event",
    "HierarchyGraph",
    "Mismatch",
    "ParseError",
    "StructureError",
    "Token",
    "VerificationReport",
    "ViolationSet",
    "ambiguity_adjust",
    "ambiguity_profile",
    "detect_parents",
    "embed",
    "enforce_step",
    "evaluate",
    "find_violations",
    "generate_hierarchy",
    "ground_truth_chains",
    "init_embedding",
    "interval",
    "load_edge_list",
    "nearest_ancestor",
    "past_cone",
    "perfect_embed",
    "rank_of_parent",
    "repair_pair",
    "retrieve_chain",
    "run_sweeps",
    "transitive_closure",
    "verify_all",
    "write_edge_list",
]
