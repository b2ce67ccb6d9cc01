"""Spacetime embedding engine.

Each token becomes an event in (1+d)-dimensional flat spacetime (units with
the speed of light set to 1). Spatial coordinates are drawn once, uniform on
(-1, 1), and never move again; only time coordinates are adjusted, by
sweeping over the training pairs and bumping each violating descendant
forward in time until every pair is causally related.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .hierarchy import ClosurePairSet, Token

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingConfig:
    """Knobs for the embedding and repair pipeline.

    ``margin`` is the slack added above the light cone whenever a violated
    pair is fixed; ``parent_share`` is the fraction of each fix pushed onto
    the ancestor instead of the descendant (0 keeps ancestors pinned).
    ``second_parent_gap`` is the proximity threshold used to decide that a
    token has two parents; it is tied to one tenth of the margin.
    """

    spatial_dim: int = 2
    margin: float = 1e-5
    parent_share: float = 0.0
    seed: int = 0
    max_sweeps: int = 10_000
    repair_radius: tuple[float, float] = (0.01, 0.1)
    repair_time_scale: float = 1.0
    max_repair_rounds: int = 1_000
    max_adjust_trials: int = 10_000

    def __post_init__(self):
        if self.spatial_dim < 1:
            raise ValueError("spatial_dim must be >= 1")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        if not (0.0 <= self.parent_share < 1.0):
            raise ValueError("parent_share must be in [0, 1)")
        lo, hi = self.repair_radius
        if not (0 < lo <= hi):
            raise ValueError("repair_radius must satisfy 0 < low <= high")
        if self.repair_time_scale <= 0:
            raise ValueError("repair_time_scale must be positive")

    @property
    def total_dim(self) -> int:
        return self.spatial_dim + 1

    @property
    def second_parent_gap(self) -> float:
        return self.margin / 10.0

    def to_dict(self) -> dict:
        return {
            "spatial_dim": self.spatial_dim,
            "margin": self.margin,
            "parent_share": self.parent_share,
            "seed": self.seed,
            "max_sweeps": self.max_sweeps,
            "repair_radius": list(self.repair_radius),
            "repair_time_scale": self.repair_time_scale,
            "max_repair_rounds": self.max_repair_rounds,
            "max_adjust_trials": self.max_adjust_trials,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddingConfig":
        kwargs = dict(data)
        if "repair_radius" in kwargs:
            kwargs["repair_radius"] = tuple(kwargs["repair_radius"])
        return cls(**kwargs)


@dataclass(frozen=True)
class Event:
    """One token's spacetime coordinates: time scalar plus spatial vector."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64))
        if not math.isfinite(self.t) or not np.all(np.isfinite(self.x)):
            raise ValueError("event coordinates must be finite")


def interval(a: Event, b: Event) -> float:
    """Invariant interval -dt^2 + dx.dx between two events.

    Negative is timelike (causally connectable), zero lightlike, positive
    spacelike. Symmetric in its arguments.
    """
    if a.x.shape != b.x.shape:
        raise ValueError(f"dimension mismatch: {a.x.shape} vs {b.x.shape}")
    dt = a.t - b.t
    dx = a.x - b.x
    return float(-dt * dt + np.dot(dx, dx))


class Embedding:
    """Token-indexed events plus the configuration that produced them.

    ``t`` is the (n,) float64 time vector, ``x`` the (n, d) spatial block.
    ``converged`` certifies that the pair set this embedding was built from
    had zero violations when the flag was last set. Converged embeddings
    are safe for concurrent read access.
    """

    def __init__(
        self,
        labels: Sequence[str],
        t: np.ndarray,
        x: np.ndarray,
        config: EmbeddingConfig,
        *,
        converged: bool = False,
        sweeps_run: int = 0,
        input_digest: str | None = None,
    ):
        self.labels = list(labels)
        self.t = np.asarray(t, dtype=np.float64)
        self.x = np.asarray(x, dtype=np.float64)
        if self.t.shape != (len(self.labels),):
            raise ValueError("t must be one time coordinate per token")
        if self.x.shape != (len(self.labels), config.spatial_dim):
            raise ValueError("x must be (n_tokens, spatial_dim)")
        self.config = config
        self.converged = converged
        self.sweeps_run = sweeps_run
        self.input_digest = input_digest
        self._label_to_id = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def n_tokens(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def event(self, token: int) -> Event:
        self.check_token(token)
        return Event(float(self.t[token]), self.x[token].copy())

    def index_of(self, label: str) -> int:
        try:
            return self._label_to_id[label]
        except KeyError:
            raise KeyError(f"unknown token label {label!r}") from None

    def check_token(self, token: int) -> None:
        if not (0 <= token < len(self.labels)):
            raise KeyError(f"unknown token id {token}")

    def copy(self) -> "Embedding":
        return Embedding(
            self.labels,
            self.t.copy(),
            self.x.copy(),
            self.config,
            converged=self.converged,
            sweeps_run=self.sweeps_run,
            input_digest=self.input_digest,
        )

    # -- serialization ---------------------------------------------------
    # JSON with shortest round-tripping decimal floats (Python repr), so a
    # written file reloads to bitwise-identical coordinates.

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "input_digest": self.input_digest,
            "converged": self.converged,
            "sweeps_run": self.sweeps_run,
            "tokens": [
                {"label": lab, "t": float(self.t[i]), "x": [float(v) for v in self.x[i]]}
                for i, lab in enumerate(self.labels)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json_dict(cls, data: dict) -> "Embedding":
        config = EmbeddingConfig.from_dict(data["config"])
        toks = data["tokens"]
        labels = [entry["label"] for entry in toks]
        t = np.array([entry["t"] for entry in toks], dtype=np.float64)
        if toks:
            x = np.array([entry["x"] for entry in toks], dtype=np.float64)
        else:
            x = np.empty((0, config.spatial_dim), dtype=np.float64)
        return cls(
            labels,
            t,
            x,
            config,
            converged=bool(data.get("converged", False)),
            sweeps_run=int(data.get("sweeps_run", 0)),
            input_digest=data.get("input_digest"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Embedding":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ViolationSet:
    """Indices into the pair list whose causal relation does not hold yet."""

    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __bool__(self) -> bool:
        return len(self.indices) > 0


def _labels_of(tokens: Sequence[Token] | Sequence[str]) -> list[str]:
    return [tok.label if isinstance(tok, Token) else str(tok) for tok in tokens]


def init_embedding(
    tokens: Sequence[Token] | Sequence[str], config: EmbeddingConfig
) -> Embedding:
    """Fresh embedding: spatial coordinates i.i.d. uniform on (-1, 1), all
    time coordinates exactly zero. Deterministic per config seed."""
    labels = _labels_of(tokens)
    if not labels:
        raise ValueError("token list must be non-empty")
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    x = rng.uniform(-1.0, 1.0, size=(len(labels), config.spatial_dim))
    t = np.zeros(len(labels), dtype=np.float64)
    return Embedding(labels, t, x, config)


def _check_pairs(emb: Embedding, ci: np.ndarray, pi: np.ndarray) -> None:
    if len(ci) and (
        ci.min() < 0 or pi.min() < 0 or ci.max() >= len(emb) or pi.max() >= len(emb)
    ):
        raise KeyError("pair set references tokens outside the embedding")


def pair_distances(emb: Embedding, pairs: ClosurePairSet) -> np.ndarray:
    """Euclidean spatial distance for every pair, in pair order."""
    ci, pi = pairs.as_arrays()
    _check_pairs(emb, ci, pi)
    diff = emb.x[ci] - emb.x[pi]
    return np.sqrt((diff * diff).sum(axis=1))


def find_violations(emb: Embedding, pairs: ClosurePairSet) -> ViolationSet:
    """Pairs whose descendant is not strictly inside its ancestor's future.

    A pair (X, Y) violates when t_X - t_Y <= 0 or t_X - t_Y < |x_X - x_Y|.
    Read-only; safe to run concurrently with other reads.
    """
    ci, pi = pairs.as_arrays()
    if len(ci) == 0:
        return ViolationSet(np.empty(0, dtype=np.int64))
    _check_pairs(emb, ci, pi)
    dt = emb.t[ci] - emb.t[pi]
    dist = pair_distances(emb, pairs)
    bad = (dt <= 0.0) | (dt < dist)
    return ViolationSet(np.nonzero(bad)[0])


def enforce_step(
    emb: Embedding,
    pairs: ClosurePairSet,
    _dist: Sequence[float] | None = None,
) -> tuple[Embedding, int]:
    """One full sweep over the pairs in stored order, fixing each violation
    at visit time with the then-current coordinates.

    A violated pair is lifted to t_X - t_Y = dist + margin, split between
    descendant and ancestor according to ``parent_share``. Spatial
    coordinates are never touched. Sequential by design: each fix must see
    the previous ones. Returns the embedding and the number of fixes.
    """
    ci, pi = pairs.as_arrays()
    if _dist is None:
        _dist = pair_distances(emb, pairs).tolist()
    margin = emb.config.margin
    share = emb.config.parent_share
    t = emb.t.tolist()
    child_idx = ci.tolist()
    parent_idx = pi.tolist()
    fixed = 0
    if share == 0.0:
        for k in range(len(child_idx)):
            x = child_idx[k]
            y = parent_idx[k]
            d = _dist[k]
            dt = t[x] - t[y]
            if dt <= 0.0 or dt < d:
                t[x] = t[x] + ((d + margin) - dt)
                fixed += 1
    else:
        keep = 1.0 - share
        for k in range(len(child_idx)):
            x = child_idx[k]
            y = parent_idx[k]
            d = _dist[k]
            dt = t[x] - t[y]
            if dt <= 0.0 or dt < d:
                delta = (d + margin) - dt
                t[x] = t[x] + delta * keep
                t[y] = t[y] - delta * share
                fixed += 1
    emb.t = np.asarray(t, dtype=np.float64)
    emb.sweeps_run += 1
    if fixed:
        emb.converged = False
    return emb, fixed


def run_sweeps(emb: Embedding, pairs: ClosurePairSet) -> Embedding:
    """Sweep until the violation set is empty or the sweep budget runs out.

    Sets ``converged`` accordingly; a non-converged result is returned with
    a logged diagnostic rather than raised.
    """
    dist = pair_distances(emb, pairs).tolist()
    budget = emb.config.max_sweeps
    start = emb.sweeps_run
    while True:
        if not find_violations(emb, pairs):
            emb.converged = True
            return emb
        if emb.sweeps_run - start >= budget:
            emb.converged = False
            log.warning(
                "sweep budget exhausted after %d sweeps with %d violations left",
                emb.sweeps_run - start,
                len(find_violations(emb, pairs)),
            )
            return emb
        enforce_step(emb, pairs, dist)


def embed(
    pairs: ClosurePairSet,
    tokens: Sequence[Token] | Sequence[str],
    config: EmbeddingConfig,
) -> Embedding:
    """Initialize and sweep to convergence over the given pair set.

    On success every pair satisfies t_X - t_Y > 0 and t_X - t_Y >= dist,
    i.e. every ancestor sits in the causal past of its descendants, and
    tokens that never appear as descendants (the roots) still sit at the
    minimum time coordinate.
    """
    emb = init_embedding(tokens, config)
    run_sweeps(emb, pairs)
    if emb.converged and len(emb) > 0 and len(pairs) > 0:
        ci, _ = pairs.as_arrays()
        is_child = np.zeros(len(emb), dtype=bool)
        is_child[ci] = True
        t_min = emb.t.min()
        if not np.any(emb.t[~is_child] == t_min):
            # Should be unreachable: with parent_share = 0 roots stay at 0
            # and every descendant is pushed strictly later.
            log.warning("minimum time coordinate is not attained by a root token")
    return emb
