"""Word embedding sets and their plain-text interchange format.

The format is one token per line followed by ``d`` whitespace separated
numbers.  Line order is the token rank (treated as descending corpus
frequency).  A leading ``<n> <d>`` header line, as written by several
popular tools, is tolerated and skipped.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateToken,
    EmptyInput,
    FormatError,
    NonFiniteValue,
)

__all__ = [
    "Collection",
    "EmbeddingSet",
    "load_embeddings",
    "save_embeddings",
    "format_embeddings",
    "lookup",
    "load_counts",
]


class Collection(str, Enum):
    TWEET = "tweet"
    NEWS = "news"


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Ordered vocabulary plus an ``n x d`` matrix of finite reals.

    Instances are immutable: the matrix is copied on construction and
    marked read-only, so a set can be shared freely between threads.
    """

    tokens: tuple[str, ...]
    matrix: np.ndarray
    language: str = "und"
    collection: Collection = Collection.TWEET
    transformed: bool = False
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        matrix = np.array(self.matrix, dtype=np.float64, copy=True)
        if matrix.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d matrix, got shape {matrix.shape}")
        if matrix.shape[0] != len(tokens):
            raise DimensionMismatch(
                f"{len(tokens)} tokens but {matrix.shape[0]} matrix rows"
            )
        if matrix.shape[1] < 1:
            raise DimensionMismatch("embedding dimension must be >= 1")
        if not np.all(np.isfinite(matrix)):
            bad = int(np.argwhere(~np.isfinite(matrix))[0, 0])
            raise NonFiniteValue(f"non-finite value in row of token {tokens[bad]!r}")
        index = {}
        for i, tok in enumerate(tokens):
            if tok in index:
                raise DuplicateToken(f"duplicate token {tok!r}")
            index[tok] = i
        matrix.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "collection", Collection(self.collection))
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.tokens == other.tokens
            and self.language == other.language
            and self.collection == other.collection
            and self.transformed == other.transformed
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None

    def index(self, token: str) -> int | None:
        return self._index.get(token)

    def vector(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self.matrix[i]

    def subset(self, tokens: Sequence[str]) -> "EmbeddingSet":
        """Rows for ``tokens`` in the given order (all must be present)."""
        rows = [self._index[t] for t in tokens]
        return replace(self, tokens=tuple(tokens), matrix=self.matrix[rows])

    def with_matrix(self, matrix: np.ndarray, **changes) -> "EmbeddingSet":
        return replace(self, matrix=matrix, **changes)


def lookup(emb: EmbeddingSet, token: str) -> np.ndarray | None:
    """Row for ``token``, or ``None`` when the token is absent."""
    return emb.vector(token)


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        n, d = int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return n >= 0 and d >= 1


def parse_embeddings(
    lines: Iterable[str],
    language: str = "und",
    collection: Collection | str = Collection.TWEET,
    source: str = "<input>",
) -> EmbeddingSet:
    tokens: list[str] = []
    rows: list[list[float]] = []
    dim = None
    first = True
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        if first:
            first = False
            if _is_header(fields):
                continue
        token, values = fields[0], fields[1:]
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise DimensionMismatch(f"{source}:{lineno}: token {token!r} has no values")
        elif len(values) != dim:
            raise DimensionMismatch(
                f"{source}:{lineno}: expected {dim} values, found {len(values)}"
            )
        try:
            row = [float(v) for v in values]
        except ValueError as exc:
            raise FormatError(f"{source}:{lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in row):
            raise NonFiniteValue(f"{source}:{lineno}: non-finite value for {token!r}")
        tokens.append(token)
        rows.append(row)
    if not tokens:
        raise EmptyInput(f"{source}: no embedding lines")
    try:
        return EmbeddingSet(tuple(tokens), np.array(rows), language, Collection(collection))
    except DuplicateToken as exc:
        raise DuplicateToken(f"{source}: {exc}") from None


def load_counts(path: str | os.PathLike) -> dict[str, int]:
    """Read a ``token<TAB>count`` sidecar file."""
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected token<TAB>count")
            try:
                counts[parts[0]] = int(parts[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad count {parts[1]!r}") from None
    return counts


def reorder_by_counts(emb: EmbeddingSet, counts: Mapping[str, int]) -> EmbeddingSet:
    """Sort tokens by descending count; ties and uncounted tokens keep file order."""
    order = sorted(
        range(len(emb)),
        key=lambda i: (-counts.get(emb.tokens[i], -1), i),
    )
    return emb.subset([emb.tokens[i] for i in order])


def load_embeddings(
    path: str | os.PathLike,
    language: str = "und",
    collection: Collection | str = Collection.TWEET,
    counts_path: str | os.PathLike | None = None,
) -> EmbeddingSet:
    """Load a text-format embedding file.

    If ``counts_path`` names a sidecar count file, token rank follows the
    counts instead of line order.
    """
    with open(path, encoding="utf-8") as fh:
        emb = parse_embeddings(fh, language, collection, source=str(path))
    if counts_path is not None:
        emb = reorder_by_counts(emb, load_counts(counts_path))
    return emb


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def format_embeddings(emb: EmbeddingSet) -> str:
    lines = [
        emb.tokens[i] + " " + " ".join(_fmt(v) for v in emb.matrix[i])
        for i in range(len(emb))
    ]
    return "\n".join(lines) + "\n"


def save_embeddings(emb: EmbeddingSet, path: str | os.PathLike) -> None:
    """Write ``emb`` in the text format (10 significant digits)."""
    path = Path(path)
    try:
        path.write_text(format_embeddings(emb), encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write embeddings to {path}: {exc.strerror}") from exc
