"""Procrustes alignment between tweet and news embedding spaces.

A fitted model maps a row ``x`` of the source space to
``scale * (x - source_centroid) @ rotation + target_centroid``.  The
direction tag records which collection plays the source role: ``T2N``
moves tweet vectors into the news space, ``N2T`` the reverse.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingSet
from .errors import DegenerateSource, DimMismatch, FormatError, NonFiniteValue, NoOverlap

__all__ = [
    "Direction",
    "PairedVocabulary",
    "AlignmentModel",
    "common_vocab",
    "procrustes_fit",
    "apply_alignment",
    "fit_and_transform_crosslingual",
    "save_model",
    "load_model",
]


class Direction(str, Enum):
    T2N = "T2N"
    N2T = "N2T"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, Direction):
            return value
        return cls(str(value).upper())


@dataclass(frozen=True)
class PairedVocabulary:
    """Common tokens with row-aligned tweet-side and news-side matrices."""

    tokens: tuple[str, ...]
    source_matrix: np.ndarray
    target_matrix: np.ndarray

    def __post_init__(self):
        if self.source_matrix.shape != self.target_matrix.shape:
            raise DimMismatch(
                f"paired matrices differ in shape: {self.source_matrix.shape} "
                f"vs {self.target_matrix.shape}"
            )
        if self.source_matrix.shape[0] != len(self.tokens):
            raise DimMismatch("row count does not match token count")

    def __len__(self):
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.source_matrix.shape[1]


@dataclass(frozen=True, eq=False)
class AlignmentModel:
    source_centroid: np.ndarray
    target_centroid: np.ndarray
    scale: float
    rotation: np.ndarray
    direction: Direction = Direction.T2N
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimMismatch(f"model dimension {self.dim}, input dimension {x.shape[-1]}")
        return self.scale * (x - self.source_centroid) @ self.rotation + self.target_centroid

    @classmethod
    def identity(cls, dim: int, direction=Direction.T2N) -> "AlignmentModel":
        zero = np.zeros(dim)
        return cls(zero, zero.copy(), 1.0, np.eye(dim), Direction.parse(direction), 0.0)


def common_vocab(
    source: EmbeddingSet, target: EmbeddingSet, top_f: int | None = None
) -> PairedVocabulary:
    """Shared tokens in source rank order, truncated to the first ``top_f``."""
    if source.dim != target.dim:
        raise DimMismatch(f"source dimension {source.dim} != target dimension {target.dim}")
    tokens = [t for t in source.tokens if t in target]
    if top_f is not None:
        if top_f < 1:
            raise ValueError("top_f must be >= 1")
        tokens = tokens[:top_f]
    if not tokens:
        raise NoOverlap("NoOverlap: the two vocabularies share no tokens")
    src = source.matrix[[source.index(t) for t in tokens]]
    tgt = target.matrix[[target.index(t) for t in tokens]]
    return PairedVocabulary(tuple(tokens), src, tgt)


def _similarity_fit(S: np.ndarray, T: np.ndarray):
    mu_s = S.mean(axis=0)
    mu_t = T.mean(axis=0)
    Sc = S - mu_s
    Tc = T - mu_t
    norm_sq = float(np.sum(Sc * Sc))
    if norm_sq == 0.0:
        raise DegenerateSource("DegenerateSource: all source rows are identical")
    U, sigma, Vt = np.linalg.svd(Sc.T @ Tc)
    Q = U @ Vt
    j = float(sigma.sum() / norm_sq)
    residual = float(np.linalg.norm(Tc - j * Sc @ Q))
    return mu_s, mu_t, j, Q, residual


def procrustes_fit(pairs: PairedVocabulary, direction=Direction.T2N) -> AlignmentModel:
    """Fit translation, uniform scale and orthogonal map between paired rows.

    For ``T2N`` the tweet side is moved onto the news side; ``N2T`` swaps
    the roles.  Minimises ``||T~ - j S~ Q||_F`` over orthogonal ``Q`` and
    ``j > 0`` where ``S~``, ``T~`` are the centred matrices.  Reflections
    are allowed.
    """
    direction = Direction.parse(direction)
    c, d = pairs.source_matrix.shape
    if c < 2:
        raise ValueError(f"need at least 2 paired tokens, got {c}")
    if c < d:
        warnings.warn(
            f"only {c} paired tokens for dimension {d}; the fit is underdetermined",
            RuntimeWarning,
            stacklevel=2,
        )
    S, T = pairs.source_matrix, pairs.target_matrix
    if direction is Direction.N2T:
        S, T = T, S
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(T))):
        raise NonFiniteValue("NonFinite: paired matrices contain NaN or Inf")
    mu_s, mu_t, j, Q, residual = _similarity_fit(S, T)
    return AlignmentModel(mu_s, mu_t, j, Q, direction, residual)


def apply_alignment(model: AlignmentModel, emb: EmbeddingSet) -> EmbeddingSet:
    if emb.dim != model.dim:
        raise DimMismatch(f"DimMismatch: model dimension {model.dim}, embeddings {emb.dim}")
    return emb.with_matrix(model.transform(emb.matrix), transformed=True)


def fit_and_transform_crosslingual(
    tweet_set: EmbeddingSet, bilingual_news: EmbeddingSet, top_f: int | None = None
) -> tuple[AlignmentModel, EmbeddingSet]:
    """Map tweet vectors of one language into a bilingual news space.

    The news side is the same-language half of a jointly trained bilingual
    embedding, so the mapped tweet vectors become comparable with news in
    the other language as well.
    """
    if tweet_set.language != bilingual_news.language:
        warnings.warn(
            f"tweet language {tweet_set.language!r} differs from bilingual news "
            f"language {bilingual_news.language!r}",
            RuntimeWarning,
            stacklevel=2,
        )
    pairs = common_vocab(tweet_set, bilingual_news, top_f)
    model = procrustes_fit(pairs, Direction.T2N)
    return model, apply_alignment(model, tweet_set)


# -- serialization -----------------------------------------------------------

def model_to_dict(model: AlignmentModel) -> dict:
    return {
        "format": "twe-alignment/1",
        "dim": model.dim,
        "direction": model.direction.value,
        "scale": float(model.scale),
        "residual": float(model.residual),
        "source_centroid": [float(v) for v in model.source_centroid],
        "target_centroid": [float(v) for v in model.target_centroid],
        "rotation": [float(v) for v in np.asarray(model.rotation).ravel()],
    }


def model_from_dict(data: dict) -> AlignmentModel:
    try:
        d = int(data["dim"])
        rot = np.array(data["rotation"], dtype=np.float64)
        model = AlignmentModel(
            source_centroid=np.array(data["source_centroid"], dtype=np.float64),
            target_centroid=np.array(data["target_centroid"], dtype=np.float64),
            scale=float(data["scale"]),
            rotation=rot.reshape(d, d),
            direction=Direction.parse(data["direction"]),
            residual=float(data["residual"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed alignment model: {exc}") from None
    if model.source_centroid.shape != (d,) or model.target_centroid.shape != (d,):
        raise FormatError("centroid length does not match dim")
    return model


def dumps_model(model: AlignmentModel) -> str:
    # json writes floats with repr(), i.e. the shortest exact round-trip form
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def save_model(model: AlignmentModel, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | os.PathLike) -> AlignmentModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a model file ({exc})") from None
    return model_from_dict(data)
