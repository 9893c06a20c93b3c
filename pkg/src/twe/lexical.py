"""Nearest-neighbour lists and rank-biased overlap between two spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingSet
from .errors import EmptyList, InvalidPersistence, OOVQuery

__all__ = [
    "RankedList",
    "nearest_neighbors",
    "neighbor_lists",
    "rbo",
    "avg_rbo",
    "rbo_table",
]

_CHUNK = 512


@dataclass(frozen=True)
class RankedList:
    query: str
    items: tuple[str, ...]
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if len(self.items) > self.depth:
            raise ValueError("more items than depth")
        if len(set(self.items)) != len(self.items):
            raise ValueError("ranked list contains duplicates")
        if self.query in self.items:
            raise ValueError("ranked list contains its own query")

    def __len__(self):
        return len(self.items)


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return matrix / norms


def _top_k(unit: np.ndarray, rows: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` most cosine-similar rows for each query row.

    Ties go to the lower row index; the query row itself is excluded.
    """
    sims = unit[rows] @ unit.T
    sims[np.arange(len(rows)), rows] = -np.inf
    order = np.argsort(-sims, axis=1, kind="stable")
    return order[:, :k]


def nearest_neighbors(emb: EmbeddingSet, query: str, k: int) -> RankedList:
    """The ``k`` tokens most cosine-similar to ``query`` (query excluded)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    i = emb.index(query)
    if i is None:
        raise OOVQuery(f"OOVQuery: {query!r} is not in the vocabulary")
    kk = min(k, len(emb) - 1)
    idx = _top_k(_unit_rows(emb.matrix), np.array([i]), kk)[0]
    return RankedList(query, tuple(emb.tokens[j] for j in idx), k)


def neighbor_lists(emb: EmbeddingSet, k: int) -> list[RankedList]:
    """Neighbour lists for every token of ``emb`` against its own vocabulary."""
    unit = _unit_rows(emb.matrix)
    kk = min(k, len(emb) - 1)
    out = []
    for start in range(0, len(emb), _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, len(emb)))
        top = _top_k(unit, rows, kk)
        for r, idx in zip(rows, top):
            out.append(RankedList(emb.tokens[r], tuple(emb.tokens[j] for j in idx), k))
    return out


def _items(x) -> tuple[Sequence, int]:
    if isinstance(x, RankedList):
        return x.items, x.depth
    x = tuple(x)
    return x, len(x)


def rbo(s, t, p: float = 0.9, variant: str = "ext") -> float:
    """Rank-biased overlap of two rankings, evaluated to their common depth.

    ``s`` and ``t`` are :class:`RankedList` objects or plain sequences.
    ``variant="ext"`` gives the extrapolated score, ``"min"`` the lower
    bound.  The result lies in ``[0, 1]`` and is symmetric in ``s, t``.
    """
    if not (0.0 < p < 1.0):
        raise InvalidPersistence(f"persistence must lie in (0, 1), got {p}")
    s_items, s_depth = _items(s)
    t_items, t_depth = _items(t)
    if not s_items or not t_items:
        raise EmptyList("EmptyList: cannot compare an empty ranking")
    k = min(s_depth, t_depth, len(s_items), len(t_items))

    seen_s: set = set()
    seen_t: set = set()
    overlap = 0
    X = [0] * (k + 1)
    for d in range(1, k + 1):
        a, b = s_items[d - 1], t_items[d - 1]
        if a == b:
            overlap += 1
        else:
            overlap += (a in seen_t) + (b in seen_s)
        seen_s.add(a)
        seen_t.add(b)
        X[d] = overlap

    if variant == "ext":
        if all(X[d] == d for d in range(1, k + 1)):
            # prefixes agree at every depth; the closed form is exactly 1
            return 1.0
        total = 0.0
        pd = 1.0
        for d in range(1, k + 1):
            pd *= p
            total += X[d] / d * pd
        value = X[k] / k * pd + (1.0 - p) / p * total
    elif variant == "min":
        total = 0.0
        pd = 1.0
        for d in range(1, k + 1):
            pd *= p
            total += (X[d] - X[k]) / d * pd
        value = (1.0 - p) / p * (total - X[k] * math.log(1.0 - p))
    else:
        raise ValueError(f"unknown RBO variant {variant!r}")
    return min(1.0, max(0.0, value))


def _pool_lists(
    emb: EmbeddingSet, queries: Sequence[str], pool: Sequence[str], k: int
) -> list[RankedList]:
    for t in list(queries) + list(pool):
        if t not in emb:
            raise OOVQuery(f"OOVQuery: {t!r} is not in the vocabulary")
    pool_set = emb.subset(pool)
    unit = _unit_rows(pool_set.matrix)
    q_unit = _unit_rows(emb.subset(queries).matrix)
    pos = {t: i for i, t in enumerate(pool)}
    out = []
    for start in range(0, len(queries), _CHUNK):
        chunk = queries[start:start + _CHUNK]
        sims = q_unit[start:start + len(chunk)] @ unit.T
        for r, q in enumerate(chunk):
            if q in pos:
                sims[r, pos[q]] = -np.inf
        order = np.argsort(-sims, axis=1, kind="stable")
        for r, q in enumerate(chunk):
            n_cand = len(pool) - (q in pos)
            idx = order[r, : min(k, n_cand)]
            out.append(RankedList(q, tuple(pool[j] for j in idx), k))
    return out


def rbo_table(
    source: EmbeddingSet,
    target: EmbeddingSet,
    tokens: Sequence[str],
    p: float = 0.9,
    k: int = 100,
    variant: str = "ext",
    pool: Sequence[str] | None = None,
) -> list[float]:
    """Per-token RBO between neighbour lists of ``source`` and ``target``.

    Neighbours are drawn from ``pool`` (default: ``tokens`` itself) on both
    sides, so the two rankings cover the same candidates; ties are broken
    by position in the pool.
    """
    if not (0.0 < p < 1.0):
        raise InvalidPersistence(f"persistence must lie in (0, 1), got {p}")
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = list(tokens)
    pool = tokens if pool is None else list(pool)
    if not tokens:
        raise EmptyList("EmptyList: no tokens to compare")
    lists_s = _pool_lists(source, tokens, pool, k)
    lists_t = _pool_lists(target, tokens, pool, k)
    return [rbo(a, b, p, variant) for a, b in zip(lists_s, lists_t)]


def avg_rbo(
    source: EmbeddingSet,
    target: EmbeddingSet,
    tokens: Sequence[str],
    p: float = 0.9,
    k: int = 100,
    variant: str = "ext",
    pool: Sequence[str] | None = None,
) -> float:
    """Mean per-token RBO, reduced left to right in the order of ``tokens``."""
    scores = rbo_table(source, target, tokens, p, k, variant, pool)
    total = 0.0
    for v in scores:
        total += v
    return total / len(scores)
