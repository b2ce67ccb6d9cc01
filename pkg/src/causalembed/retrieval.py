"""Hierarchy reconstruction from geometry alone.

All operations are read-only scans over an immutable converged embedding:
past light-cone membership, minimal proper-time ancestor selection, chain
tracing to the root, and two-parent detection. The linear scan is the
reference semantics; there is no approximate index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embedding import Embedding


class ConsistencyError(RuntimeError):
    """Internal geometric invariant broken (e.g. a cycle in chain tracing)."""


@dataclass(frozen=True)
class CausalCandidate:
    """A token in some query token's causal past, with its squared proper
    time tau2 = dt^2 - dist^2 >= 0 to the query."""

    token: int
    tau2: float


@dataclass
class ChainResult:
    """The retrieved root-path for a query token.

    ``chain`` runs from the query to the token with an empty causal past.
    ``extra_parents[k]`` is the second detected parent of ``chain[k]`` when
    the two-parent rule fires at that step, else None.
    """

    query: int
    chain: list[int]
    extra_parents: list[int | None]

    def to_json_line(self, labels: list[str]) -> str:
        parents = []
        for k in range(len(self.chain)):
            if k + 1 < len(self.chain):
                step = [labels[self.chain[k + 1]]]
                if self.extra_parents[k] is not None:
                    step.append(labels[self.extra_parents[k]])
            else:
                step = []
            parents.append(step)
        return json.dumps(
            {
                "query": labels[self.query],
                "chain": [labels[i] for i in self.chain],
                "parents": parents,
            },
            separators=(",", ":"),
        )


def _require_converged(emb: Embedding) -> None:
    if not emb.converged:
        raise ValueError("retrieval requires a converged embedding")


def _cone_scan(emb: Embedding, token: int) -> tuple[np.ndarray, np.ndarray]:
    """Mask of tokens in the causal past of ``token`` and their tau2."""
    dt = emb.t[token] - emb.t
    d2 = squared_distances(emb.x, emb.x[token])
    mask = (dt > 0.0) & (dt * dt >= d2)
    tau2 = np.where(mask, dt * dt - d2, np.inf)
    return mask, tau2


def squared_distances(x: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from every row of ``x`` to ``point``.

    Accumulates one axis at a time so results are bit-identical to the
    bulk scan regardless of spatial dimension.
    """
    d2 = np.zeros(x.shape[0])
    for k in range(x.shape[1]):
        diff_k = x[:, k] - point[k]
        d2 += diff_k * diff_k
    return d2


def past_cone(emb: Embedding, token: int) -> list[CausalCandidate]:
    """All tokens in the causal past of ``token``, nearest first.

    Membership is t_token - t_z > 0 and t_token - t_z >= |x_token - x_z|;
    candidates are sorted by ascending tau2 with ties broken by token id.
    """
    _require_converged(emb)
    emb.check_token(token)
    mask, tau2 = _cone_scan(emb, token)
    ids = np.nonzero(mask)[0]
    order = np.lexsort((ids, tau2[ids]))
    return [CausalCandidate(int(ids[k]), float(tau2[ids[k]])) for k in order]


def nearest_ancestor(emb: Embedding, token: int) -> int | None:
    """The past-cone token with minimal tau2, or None for an empty cone."""
    _require_converged(emb)
    emb.check_token(token)
    return _nearest_from_scan(*_cone_scan(emb, token))


def _nearest_from_scan(mask: np.ndarray, tau2: np.ndarray) -> int | None:
    if not mask.any():
        return None
    best = tau2.min()
    # First index attaining the minimum == smallest token id (tie-break).
    return int(np.argmax(tau2 == best))


def retrieve_chain(emb: Embedding, token: int) -> ChainResult:
    """Trace nearest ancestors from ``token`` until the causal past is empty.

    Termination is geometric (time strictly decreases along the chain); a
    revisit would mean the embedding is corrupt and raises ConsistencyError.
    """
    _require_converged(emb)
    emb.check_token(token)
    chain = [token]
    extras: list[int | None] = []
    seen = {token}
    current = token
    while True:
        found = detected_parents(emb, current)
        if not found:
            extras.append(None)
            break
        nxt = found[0]
        extras.append(found[1] if len(found) > 1 else None)
        if nxt in seen:
            raise ConsistencyError(f"cycle while tracing chain from token {token}")
        chain.append(nxt)
        seen.add(nxt)
        current = nxt
    return ChainResult(token, chain, extras)


def detect_parents(emb: Embedding, token: int) -> list[int]:
    """One or two parents of ``token`` from the geometry.

    The primary parent is the nearest causal ancestor; a second is included
    only when its tau2 lies within the configured proximity gap of the
    primary's. Raises for a token with an empty causal past (the root has
    no parents to detect).
    """
    _require_converged(emb)
    emb.check_token(token)
    found = detected_parents(emb, token)
    if not found:
        raise ValueError(f"token {token} has an empty causal past (root)")
    return found


def detected_parents(emb: Embedding, token: int) -> list[int]:
    """Like detect_parents but returns [] for an empty cone."""
    mask, tau2 = _cone_scan(emb, token)
    primary = _nearest_from_scan(mask, tau2)
    if primary is None:
        return []
    if mask.sum() == 1:
        return [primary]
    best = tau2[primary]
    tau2 = tau2.copy()
    tau2[primary] = np.inf
    second = int(np.argmax(tau2 == tau2.min()))
    if tau2[second] - best <= emb.config.second_parent_gap:
        return [primary, second]
    return [primary]


def nearest_two_all(
    emb: Embedding, chunk: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Primary and runner-up causal ancestors for every token at once.

    Returns (primary, second, tau2_primary, tau2_second); -1 and +inf mark
    absent candidates. Chunked so the pairwise block stays modest; results
    match the per-token scan exactly, including id tie-breaks.
    """
    n = len(emb)
    if chunk is None:
        chunk = max(1, min(n, int(4_000_000 // max(n, 1)) or 1))
    primary = np.full(n, -1, dtype=np.int64)
    second = np.full(n, -1, dtype=np.int64)
    tau2_1 = np.full(n, np.inf)
    tau2_2 = np.full(n, np.inf)
    t = emb.t
    x = emb.x
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dt = t[start:stop, None] - t[None, :]
        # Accumulate squared distances one spatial axis at a time; the sum
        # order matches the per-token scan so boundary cases agree exactly.
        d2 = np.zeros((stop - start, n))
        for k in range(x.shape[1]):
            diff_k = x[start:stop, k, None] - x[None, :, k]
            diff_k *= diff_k
            d2 += diff_k
        dt2 = dt * dt
        mask = (dt > 0.0) & (dt2 >= d2)
        tau2 = np.where(mask, dt2 - d2, np.inf)
        has_any = mask.any(axis=1)
        if not has_any.any():
            continue
        best = tau2.min(axis=1)
        first_idx = np.argmax(tau2 == best[:, None], axis=1)
        rows = np.nonzero(has_any)[0]
        primary[start + rows] = first_idx[rows]
        tau2_1[start + rows] = best[rows]
        tau2[rows, first_idx[rows]] = np.inf
        has_second = mask.sum(axis=1) > 1
        rows2 = np.nonzero(has_second)[0]
        if len(rows2):
            best2 = tau2[rows2].min(axis=1)
            second_idx = np.argmax(tau2[rows2] == best2[:, None], axis=1)
            second[start + rows2] = second_idx
            tau2_2[start + rows2] = best2
    return primary, second, tau2_1, tau2_2


def detected_parent_table(emb: Embedding) -> list[list[int]]:
    """Detected parent list (0, 1 or 2 entries) for every token."""
    primary, second, tau2_1, tau2_2 = nearest_two_all(emb)
    gap = emb.config.second_parent_gap
    table: list[list[int]] = []
    for i in range(len(emb)):
        if primary[i] < 0:
            table.append([])
        elif second[i] >= 0 and tau2_2[i] - tau2_1[i] <= gap:
            table.append([int(primary[i]), int(second[i])])
        else:
            table.append([int(primary[i])])
    return table
