"""Hierarchical input data: edge-list parsing, validation, transitive closures,
ground-truth chains, and synthetic hierarchy generation.

A hierarchy is a set of oriented ``child -> parent`` edges ("X is-a Y").
Everything downstream consumes either the graph itself (for ground truth)
or its transitive closure (as training pairs for the embedding engine).
All functions here are pure with respect to their graph argument; graphs
are treated as immutable after construction.
"""

from __future__ import annotations

import io
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

# Hard ceiling on distinct root-paths per token; real taxonomies stay far
# below this, and blowing past it almost always means the input is not the
# kind of data this library is for.
MAX_PATHS_PER_TOKEN = 10_000


class ParseError(ValueError):
    """Malformed edge-list input. Carries the offending 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class StructureError(ValueError):
    """Edge list violates a graph invariant (cycle, duplicate, bad root count)."""


@dataclass(frozen=True)
class Token:
    """A vocabulary entry: dense non-negative id plus unique label."""

    id: int
    label: str


class HierarchyGraph:
    """Tokens plus oriented child->parent edges, validated acyclic.

    Ids are dense 0..n-1 in first-appearance order, labels are unique.
    ``roots`` are the tokens with no parent. Construction validates that
    there are no self-loops, no duplicate edges and no cycles; tree-shape
    constraints (single root, single parent) are opt-in via the loader
    flags or :meth:`require_tree`.
    """

    def __init__(self, tokens: Sequence[Token], edges: Sequence[tuple[int, int]]):
        self.tokens: list[Token] = list(tokens)
        self.edges: list[tuple[int, int]] = list(edges)
        n = len(self.tokens)
        if [tok.id for tok in self.tokens] != list(range(n)):
            raise StructureError("token ids must be dense 0..n-1 in order")
        labels = [tok.label for tok in self.tokens]
        if len(set(labels)) != n:
            raise StructureError("token labels must be unique")
        self._label_to_id = {tok.label: tok.id for tok in self.tokens}

        self.parents: list[list[int]] = [[] for _ in range(n)]
        self.children: list[list[int]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for child, parent in self.edges:
            if not (0 <= child < n and 0 <= parent < n):
                raise StructureError(f"edge ({child}, {parent}) references unknown token")
            if child == parent:
                raise StructureError(f"self-loop on token {self.tokens[child].label!r}")
            if (child, parent) in seen:
                raise StructureError(
                    f"duplicate edge {self.tokens[child].label!r} -> "
                    f"{self.tokens[parent].label!r}"
                )
            seen.add((child, parent))
            self.parents[child].append(parent)
            self.children[parent].append(child)

        self.roots: list[int] = [i for i in range(n) if not self.parents[i]]
        self._check_acyclic()
        self._depths: list[int] | None = None

    # -- validation ------------------------------------------------------

    def _check_acyclic(self) -> None:
        # Kahn's algorithm over child->parent arrows; leftovers are cyclic.
        n = len(self.tokens)
        out_deg = [len(p) for p in self.parents]
        queue = deque(i for i in range(n) if out_deg[i] == 0)
        visited = 0
        while queue:
            node = queue.popleft()
            visited += 1
            for child in self.children[node]:
                out_deg[child] -= 1
                if out_deg[child] == 0:
                    queue.append(child)
        if visited != n:
            member = next(i for i in range(n) if out_deg[i] > 0)
            raise StructureError(
                f"hierarchy contains a cycle through {self.tokens[member].label!r}"
            )

    def require_single_root(self) -> None:
        if len(self.roots) != 1:
            names = [self.tokens[r].label for r in self.roots]
            raise StructureError(f"expected exactly one root, found {names}")

    def require_tree(self) -> None:
        self.require_single_root()
        for i, plist in enumerate(self.parents):
            if len(plist) > 1:
                raise StructureError(
                    f"token {self.tokens[i].label!r} has {len(plist)} parents, "
                    "not a tree"
                )

    # -- basic queries -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    @property
    def labels(self) -> list[str]:
        return [tok.label for tok in self.tokens]

    def id_of(self, label: str) -> int:
        try:
            return self._label_to_id[label]
        except KeyError:
            raise KeyError(f"unknown token label {label!r}") from None

    def topological_order(self) -> list[int]:
        """Token ids ordered so every parent precedes all of its children."""
        n = len(self.tokens)
        remaining = [len(p) for p in self.parents]
        queue = deque(sorted(self.roots))
        order = []
        while queue:
            node = queue.popleft()
            order.append(node)
            for child in sorted(self.children[node]):
                remaining[child] -= 1
                if remaining[child] == 0:
                    queue.append(child)
        return order

    def depths(self) -> list[int]:
        """Per-token depth, the longest edge count down from any root."""
        if self._depths is None:
            depth = [0] * len(self.tokens)
            for node in self.topological_order():
                for parent in self.parents[node]:
                    depth[node] = max(depth[node], depth[parent] + 1)
            self._depths = depth
        return self._depths

    def summary(self) -> dict:
        """JSON-ready summary: counts plus depth and ambiguity histograms."""
        depth_hist: dict[int, int] = {}
        for d in self.depths():
            depth_hist[d] = depth_hist.get(d, 0) + 1
        profile = ambiguity_profile(self)
        return {
            "tokens": len(self.tokens),
            "edges": len(self.edges),
            "roots": len(self.roots),
            "depth_histogram": {str(k): depth_hist[k] for k in sorted(depth_hist)},
            "ambiguity_histogram": {
                str(k): v for k, v in sorted(profile.histogram.items())
            },
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


@dataclass
class ClosurePairSet:
    """All (descendant, ancestor) pairs of a graph, sorted by (child, parent) id.

    This is the training-pair set: every pair must end up causally related
    in the embedding. No reflexive pairs; every direct edge is included.
    """

    pairs: list[tuple[int, int]]
    _arrays: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(children, parents) as int64 arrays, cached."""
        if self._arrays is None:
            if self.pairs:
                arr = np.asarray(self.pairs, dtype=np.int64)
                self._arrays = (arr[:, 0].copy(), arr[:, 1].copy())
            else:
                empty = np.empty(0, dtype=np.int64)
                self._arrays = (empty, empty.copy())
        return self._arrays


def load_edge_list(
    source: IO[bytes] | IO[str] | str | Path | bytes,
    *,
    tree: bool = False,
    allow_multiple_roots: bool = False,
) -> HierarchyGraph:
    """Parse a child<TAB>parent edge list into a validated graph.

    One pair per line, UTF-8; lines starting with '#' and blank lines are
    ignored. Ids are assigned densely in first-appearance order (child
    before parent within a line). ``tree=True`` additionally enforces a
    single root and at most one parent per child.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    tokens: list[Token] = []
    index: dict[str, int] = {}

    def intern(label: str) -> int:
        if label not in index:
            index[label] = len(tokens)
            tokens.append(Token(len(tokens), label))
        return index[label]

    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip("\n\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(
                f"expected exactly one tab separator, got {len(parts) - 1}", lineno
            )
        child_label, parent_label = parts[0].strip(), parts[1].strip()
        if not child_label or not parent_label:
            raise ParseError("empty token label", lineno)
        edges.append((intern(child_label), intern(parent_label)))

    graph = HierarchyGraph(tokens, edges)
    if tree:
        graph.require_tree()
    elif not allow_multiple_roots and len(graph) > 0:
        graph.require_single_root()
    return graph


def transitive_closure(graph: HierarchyGraph) -> ClosurePairSet:
    """All (descendant, ancestor) pairs implied by the direct edges.

    Computed by per-node ancestor accumulation in topological order, so the
    result is closed under transitivity by construction. Output is sorted
    by (descendant id, ancestor id) and contains no reflexive pairs.
    """
    n = len(graph)
    ancestors: list[set[int]] = [set() for _ in range(n)]
    for node in graph.topological_order():
        acc = ancestors[node]
        for parent in graph.parents[node]:
            acc.add(parent)
            acc |= ancestors[parent]
    pairs = [(child, anc) for child in range(n) for anc in sorted(ancestors[child])]
    pairs.sort()
    return ClosurePairSet(pairs)


def ground_truth_chains(graph: HierarchyGraph) -> dict[int, tuple[tuple[int, ...], ...]]:
    """Every distinct root-path per token, token first, root last.

    A token with a single parent everywhere on its way up has exactly one
    chain; each multi-parent junction multiplies the count. Paths are
    returned sorted for deterministic comparison.
    """
    paths: dict[int, tuple[tuple[int, ...], ...]] = {}
    for node in graph.topological_order():
        if not graph.parents[node]:
            paths[node] = ((node,),)
            continue
        acc = []
        for parent in sorted(graph.parents[node]):
            for tail in paths[parent]:
                acc.append((node,) + tail)
        if len(acc) > MAX_PATHS_PER_TOKEN:
            raise StructureError(
                f"token {graph.tokens[node].label!r} has more than "
                f"{MAX_PATHS_PER_TOKEN} root-paths"
            )
        paths[node] = tuple(sorted(acc))
    return paths


@dataclass
class AmbiguityProfile:
    """How much multi-parent ambiguity a graph carries.

    ``histogram`` maps chain multiplicity (number of distinct root-paths)
    to the count of tokens with that many chains; ``multi_parent_tokens``
    lists tokens that directly have two or more parents.
    """

    histogram: dict[int, int]
    multi_parent_tokens: list[int]

    @property
    def total_chains(self) -> int:
        return sum(k * v for k, v in self.histogram.items())


def ambiguity_profile(graph: HierarchyGraph) -> AmbiguityProfile:
    chains = ground_truth_chains(graph)
    histogram: dict[int, int] = {}
    for node in range(len(graph)):
        k = len(chains[node])
        histogram[k] = histogram.get(k, 0) + 1
    multi = [i for i in range(len(graph)) if len(graph.parents[i]) >= 2]
    return AmbiguityProfile(histogram, multi)


def generate_hierarchy(
    n: int,
    max_depth: int,
    branching: int,
    two_parent_fraction: float = 0.0,
    seed: int = 0,
    *,
    two_parent_count: int | None = None,
) -> HierarchyGraph:
    """Random rooted hierarchy with bounded depth and branching.

    Builds a random tree by attaching each new token to a uniformly chosen
    existing token that still has depth and branching headroom. If
    ``two_parent_fraction`` > 0 (or ``two_parent_count`` is given), that
    many eligible leaves each receive a second parent, chosen among
    internal nodes incomparable with the leaf's first parent, so each such
    leaf gains exactly one extra root-path. Deterministic per seed.

    Args:
        n: token count, >= 1.
        max_depth: maximum depth (edges from the root).
        branching: maximum children per node.
        two_parent_fraction: fraction of eligible leaves to make ambiguous,
            in [0, 1).
        seed: PRNG seed (PCG64 via numpy's default generator).
        two_parent_count: exact number of ambiguous leaves; overrides the
            fraction when given.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if max_depth < 0 or branching < 1:
        raise ValueError("max_depth must be >= 0 and branching >= 1")
    if not (0.0 <= two_parent_fraction < 1.0):
        raise ValueError("two_parent_fraction must be in [0, 1)")

    # Capacity check: a full tree of this shape must be able to hold n nodes.
    capacity = 0
    level = 1
    for _ in range(max_depth + 1):
        capacity += level
        if capacity >= n:
            break
        level = level * branching
        if level > n:  # avoid huge powers, capacity is already unbounded enough
            capacity = n
            break
    if capacity < n:
        raise ValueError(
            f"cannot fit {n} tokens in a tree of depth {max_depth} "
            f"with branching {branching}"
        )

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    tokens = [Token(i, f"tok{i}") for i in range(n)]
    edges: list[tuple[int, int]] = []
    depth = [0] * n
    child_count = [0] * n
    # Attachment candidates: nodes with spare branching slots and depth
    # headroom. Swap-pop keeps selection O(1) per new token.
    candidates = [0]
    for node in range(1, n):
        pick = int(rng.integers(len(candidates)))
        parent = candidates[pick]
        edges.append((node, parent))
        depth[node] = depth[parent] + 1
        child_count[parent] += 1
        if child_count[parent] >= branching:
            candidates[pick] = candidates[-1]
            candidates.pop()
        if depth[node] < max_depth:
            candidates.append(node)

    graph = HierarchyGraph(tokens, edges)
    k = two_parent_count
    if k is None:
        eligible_now = _eligible_leaves(graph)
        k = int(round(two_parent_fraction * len(eligible_now)))
    if k == 0:
        return graph

    eligible = _eligible_leaves(graph)
    if k > len(eligible):
        raise ValueError(
            f"requested {k} two-parent leaves but only {len(eligible)} are eligible"
        )
    closure_sets = _ancestor_sets(graph)
    descendant_sets = _descendant_sets(graph)
    internal = [i for i in range(n) if graph.children[i]]

    chosen = rng.choice(np.asarray(eligible, dtype=np.int64), size=k, replace=False)
    extra_edges: list[tuple[int, int]] = []
    for leaf in sorted(int(c) for c in chosen):
        first_parent = graph.parents[leaf][0]
        # The second parent must be incomparable with the first: otherwise
        # the two root-paths are not genuine alternatives and the pair is
        # forced into a timelike relation no geometry can disambiguate.
        blocked = closure_sets[first_parent] | descendant_sets[first_parent]
        blocked.add(first_parent)
        options = [v for v in internal if v not in blocked]
        if not options:
            raise ValueError(
                f"no incomparable second parent available for leaf {leaf}"
            )
        second = int(options[int(rng.integers(len(options)))])
        extra_edges.append((leaf, second))

    return HierarchyGraph(tokens, edges + extra_edges)


def _eligible_leaves(graph: HierarchyGraph) -> list[int]:
    # Leaves below depth 2 have no incomparable internal candidates worth
    # speaking of, so require the first parent to be a non-root.
    depths = graph.depths()
    return [
        i
        for i in range(len(graph))
        if not graph.children[i] and graph.parents[i] and depths[i] >= 2
    ]


def _ancestor_sets(graph: HierarchyGraph) -> list[set[int]]:
    anc: list[set[int]] = [set() for _ in range(len(graph))]
    for node in graph.topological_order():
        for parent in graph.parents[node]:
            anc[node].add(parent)
            anc[node] |= anc[parent]
    return anc


def _descendant_sets(graph: HierarchyGraph) -> list[set[int]]:
    desc: list[set[int]] = [set() for _ in range(len(graph))]
    for node in reversed(graph.topological_order()):
        for child in graph.children[node]:
            desc[node].add(child)
            desc[node] |= desc[child]
    return desc


def write_edge_list(graph: HierarchyGraph, path: str | Path | None = None) -> str:
    """Serialize a graph back to canonical TSV (sorted edge order)."""
    lines = [
        f"{graph.tokens[c].label}\t{graph.tokens[p].label}"
        for c, p in sorted(graph.edges)
    ]
    text = "\n".join(lines) + ("\n" if lines else "")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
