"""Deterministic context aggregation onto the exceptional divisor.

A context window holds the embedding vectors around one token
position. Aggregating the window (mean, or fixed-query softmax
attention) and projecting the result onto P^{n-1} picks out a
direction: the divisor point this occurrence selects. The hybrid
embedding then serves the stored vector for regular tokens and the
context-selected divisor point for singular ones.

Permutation invariance is exact here, not approximate: summands are
accumulated in the order of their original sequence positions, so
shuffling a window cannot perturb even the last bit of the output.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyContext,
    MissingContext,
    NonPositiveScale,
    ZeroAggregate,
    ZeroVector,
)
from .geometry import ProjectivePoint, projective_distance, projective_from_vector

MEAN = "mean"
SOFTMAX_ATTENTION = "softmax_attention"


@dataclass(frozen=True)
class ContextEntry:
    position: int
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class ContextWindow:
    """Vectors to the left and right of one token position.

    Windows at sequence edges are simply shorter; the stored entry
    lists carry the actual counts. Entries remember their sequence
    position, which fixes the canonical accumulation order.
    """

    position: int
    k: int
    left: tuple
    right: tuple

    @property
    def entries(self):
        return self.left + self.right

    def __len__(self):
        return len(self.left) + len(self.right)

    @classmethod
    def from_sequence(cls, vectors, position, k):
        """Window of up to k positions on each side of `position` in a
        sequence of embedding rows (the row at `position` excluded)."""
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DimensionMismatch("sequence must be a 2-d array of rows")
        length = vectors.shape[0]
        if not (0 <= position < length):
            raise IndexError(f"position {position} outside sequence of {length}")
        if k < 1:
            raise ValueError(f"window size must be >= 1, got {k}")
        left = tuple(
            ContextEntry(j, vectors[j])
            for j in range(max(0, position - k), position)
        )
        right = tuple(
            ContextEntry(j, vectors[j])
            for j in range(position + 1, min(length, position + k + 1))
        )
        return cls(position=position, k=k, left=left, right=right)


@dataclass(frozen=True)
class AggregatorSpec:
    """Which permutation-invariant aggregation to apply.

    Mean needs no parameters. Softmax attention scores each context
    vector against a fixed query q at temperature tau; the parameters
    are loaded from a weights file, never trained here.
    """

    kind: str
    q: Optional[np.ndarray] = None
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in (MEAN, SOFTMAX_ATTENTION):
            raise ValueError(f"unknown aggregator kind {self.kind!r}")
        if self.kind == SOFTMAX_ATTENTION:
            if self.q is None:
                raise ValueError("softmax attention needs a query vector")
            q = np.asarray(self.q, dtype=np.float64)
            if q.ndim != 1 or not np.all(np.isfinite(q)):
                raise ValueError("query vector must be flat and finite")
            q.setflags(write=False)
            object.__setattr__(self, "q", q)
            if not self.tau > 0.0:
                raise NonPositiveScale(f"tau must be > 0, got {self.tau}")

    @classmethod
    def mean(cls):
        return cls(kind=MEAN)

    @classmethod
    def softmax_attention(cls, q, tau=1.0):
        return cls(kind=SOFTMAX_ATTENTION, q=q, tau=float(tau))

    @classmethod
    def from_json_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        kind = data.get("kind")
        if kind == MEAN:
            return cls.mean()
        if kind == SOFTMAX_ATTENTION:
            return cls.softmax_attention(
                np.asarray(data["q"], dtype=np.float64),
                float(data.get("tau", 1.0)),
            )
        raise ValueError(f"unknown aggregator kind {kind!r} in {path}")


def _canonical_rows(window):
    entries = sorted(window.entries, key=lambda e: e.position)
    if not entries:
        raise EmptyContext("context window holds no vectors")
    rows = np.vstack([e.vector for e in entries])
    if rows.ndim != 2:
        raise DimensionMismatch("context vectors must share one dimension")
    return rows


def aggregate(window, spec):
    """Combine the window's vectors into one, order-independently.

    The rows are sorted by sequence position before any floating-point
    reduction, so every permutation of the window produces bitwise the
    same result. A perfectly contradictory context can sum to zero;
    that zero is returned as is (projection is where it becomes an
    error).
    """
    rows = _canonical_rows(window)
    if spec.kind == MEAN:
        return np.add.reduce(rows, axis=0) / rows.shape[0]
    logits = rows @ spec.q / spec.tau
    m = float(np.max(logits))
    w = np.exp(logits - m)
    weighted = np.add.reduce(w[:, np.newaxis] * rows, axis=0)
    return weighted / np.add.reduce(w)


def context_map(window, spec, n=None):
    """The full context map: aggregate, then project onto P^{n-1}.

    Raises ZeroAggregate when the aggregate has norm below 1e-12;
    fabricating a direction for a contradictory context would be
    silent corruption, so the condition surfaces as an error.
    """
    agg = aggregate(window, spec)
    try:
        return projective_from_vector(agg, n)
    except ZeroVector as exc:
        raise ZeroAggregate(
            "context aggregate is numerically zero: no direction to select"
        ) from exc


@dataclass(frozen=True)
class HybridRepresentation:
    """Either a stored embedding row or a divisor point, per token.

    kind is "regular" (vector set, divisor_point None) or
    "desingularized" (the reverse). Only tokens in the singular locus
    ever take the desingularized branch.
    """

    kind: str
    token_id: int
    vector: Optional[np.ndarray] = None
    divisor_point: Optional[ProjectivePoint] = None

    @classmethod
    def regular(cls, token_id, vector):
        v = np.asarray(vector, dtype=np.float64).copy()
        v.setflags(write=False)
        return cls(kind="regular", token_id=int(token_id), vector=v)

    @classmethod
    def desingularized(cls, token_id, divisor_point):
        return cls(
            kind="desingularized",
            token_id=int(token_id),
            divisor_point=divisor_point,
        )


def hybrid_embed(token_id, window, locus, table, spec):
    """The conditional embedding: table row for regular tokens, a
    context-selected divisor point for singular ones.

    The window is ignored entirely on the regular branch. On the
    singular branch a missing or empty window is an error: there is
    nothing to disambiguate with.
    """
    token_id = int(token_id)
    if not (0 <= token_id < len(table)):
        raise IndexError(f"token id {token_id} outside table of {len(table)}")
    if token_id not in set(locus.singular_ids):
        return HybridRepresentation.regular(token_id, table.points[token_id])
    if window is None or len(window) == 0:
        raise MissingContext(
            f"token {token_id} is singular but no context was provided"
        )
    return HybridRepresentation.desingularized(
        token_id, context_map(window, spec, table.n)
    )


def nearest_divisor_component(point, cone):
    """Index of the cone cluster whose centroid is angularly nearest.

    Ties break toward the lowest cluster index, making the diagnostic
    deterministic.
    """
    if cone.k < 1:
        raise ValueError("tangent-cone estimate has no clusters")
    dists = [
        projective_distance(point, cluster.centroid)
        for cluster in cone.clusters
    ]
    return int(np.argmin(dists))
