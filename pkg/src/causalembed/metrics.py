"""Retrieval quality statistics: mean rank and mean average precision.

Every direct edge (child, parent) is scored by ranking the parent among all
other tokens under a composite key: tokens in the child's causal past come
first, ordered by ascending squared proper time, then everything else by
ascending spatial distance. Other true parents of the same child are
removed from the candidate list before ranking (filtered ranking), which
keeps MAP well defined for two-parent tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .embedding import Embedding
from .hierarchy import HierarchyGraph
from .retrieval import squared_distances


@dataclass
class EvalResult:
    mean_rank: float
    map: float
    per_edge_ranks: list[tuple[int, int, int]]  # (child, parent, rank)

    def to_json_dict(self) -> dict:
        return {
            "mean_rank": self.mean_rank,
            "map": self.map,
            "edges": len(self.per_edge_ranks),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n"

    def per_edge_csv(self, labels: list[str] | None = None) -> str:
        lines = ["child,parent,rank"]
        for child, parent, rank in self.per_edge_ranks:
            if labels is not None:
                lines.append(f"{labels[child]},{labels[parent]},{rank}")
            else:
                lines.append(f"{child},{parent},{rank}")
        return "\n".join(lines) + "\n"


def _candidate_keys(emb: Embedding, child: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite ranking key for every token relative to ``child``.

    Returns (group, value): group 0 with value tau2 for tokens in the
    child's causal past, group 1 with value spatial distance otherwise.
    """
    dt = emb.t[child] - emb.t
    d2 = squared_distances(emb.x, emb.x[child])
    mask = (dt > 0.0) & (dt * dt >= d2)
    group = np.where(mask, 0, 1)
    value = np.where(mask, dt * dt - d2, np.sqrt(d2))
    return group, value


def rank_of_parent(
    emb: Embedding,
    child: int,
    parent: int,
    *,
    exclude: Iterable[int] = (),
) -> int:
    """1-based rank of ``parent`` among all candidate tokens for ``child``.

    ``exclude`` should list the child's other true parents so they do not
    compete with the one being ranked. The rank is one plus the number of
    candidates whose key is strictly smaller.
    """
    emb.check_token(child)
    emb.check_token(parent)
    group, value = _candidate_keys(emb, child)
    gp, vp = int(group[parent]), float(value[parent])
    less = (group < gp) | ((group == gp) & (value < vp))
    less[child] = False
    less[parent] = False
    for other in exclude:
        emb.check_token(other)
        if other != parent:
            less[other] = False
    return int(less.sum()) + 1


def evaluate(emb: Embedding, graph: HierarchyGraph) -> EvalResult:
    """Mean rank over all direct edges and MAP over children.

    MAP uses the same filtered ranking: for a child with parents at
    filtered ranks r_(1) <= r_(2) <= ..., the average precision is
    mean_i of i / (r_(i) + i - 1), the precision at each true parent's
    position in the unfiltered list.
    """
    if len(graph) != len(emb):
        raise ValueError("embedding and graph token counts differ")
    if not graph.edges:
        raise ValueError("graph has no edges, nothing to evaluate")

    ranks: list[tuple[int, int, int]] = []
    ap_values: list[float] = []
    for child in range(len(graph)):
        parents = graph.parents[child]
        if not parents:
            continue
        group, value = _candidate_keys(emb, child)
        child_ranks = []
        for parent in parents:
            gp, vp = int(group[parent]), float(value[parent])
            less = (group < gp) | ((group == gp) & (value < vp))
            less[child] = False
            for other in parents:
                less[other] = False
            rank = int(less.sum()) + 1
            child_ranks.append(rank)
            ranks.append((child, parent, rank))
        child_ranks.sort()
        ap = sum(
            (i + 1) / (r + i) for i, r in enumerate(child_ranks)
        ) / len(child_ranks)
        ap_values.append(ap)

    ranks.sort()
    mean_rank = float(np.mean([r for _, _, r in ranks]))
    map_score = float(np.mean(ap_values))
    return EvalResult(mean_rank, map_score, ranks)
