"""Tweet-news similarity scoring, relevance classification and evaluation."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .alignment import AlignmentModel, Direction, apply_alignment
from .embeddings import EmbeddingSet
from .errors import (
    AllTied,
    DimMismatch,
    FormatError,
    LengthMismatch,
    NoRepresentableTokens,
    RaggedRatings,
    SingleClass,
    UnresolvedId,
    ZeroVariance,
    ZeroVector,
)
from .text import Document, doc_embedding, tf_idf

__all__ = [
    "JudgmentRecord",
    "EvalReport",
    "LinearSVM",
    "ClassifierConfig",
    "cosine",
    "aggregate_judgments",
    "pearson",
    "kendall_tau",
    "train_relevance_classifier",
    "kfold_accuracy",
    "evaluate_dataset",
    "read_gold",
    "write_gold",
]

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"


@dataclass(frozen=True)
class JudgmentRecord:
    tweet_id: str
    news_id: str
    tweet_lang: str
    news_lang: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 2.0:
            raise ValueError(f"score {self.score} outside [0, 2]")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("ZeroVector: cosine of a zero vector is undefined")
    return float(min(1.0, max(-1.0, float(u @ v) / (nu * nv))))


def aggregate_judgments(
    pairs: Sequence[tuple[str, str, str, str]],
    ratings: Sequence[Sequence[float]],
) -> list[JudgmentRecord]:
    """Average annotator scores per pair.

    ``pairs`` holds ``(tweet_id, news_id, tweet_lang, news_lang)``;
    ``ratings`` holds one score list per annotator, aligned with ``pairs``.
    """
    if not ratings:
        raise RaggedRatings("no annotator ratings supplied")
    n = len(pairs)
    for k, r in enumerate(ratings):
        if len(r) != n:
            raise RaggedRatings(
                f"RaggedRatings: annotator {k} rated {len(r)} pairs, expected {n}"
            )
        for s in r:
            if s not in (0, 1, 2):
                raise ValueError(f"annotator {k} gave score {s!r}; allowed are 0, 1, 2")
    out = []
    for i, pair in enumerate(pairs):
        total = 0.0
        for r in ratings:
            total += r[i]
        out.append(JudgmentRecord(*pair, score=total / len(ratings)))
    return out


def _pair_arrays(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"LengthMismatch: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise LengthMismatch("need at least two observations")
    return x, y


def pearson(xs, ys) -> float:
    x, y = _pair_arrays(xs, ys)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("ZeroVariance: an input is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def kendall_tau(xs, ys) -> float:
    """Kendall's tau-b, i.e. corrected for ties in either input."""
    x, y = _pair_arrays(xs, ys)
    n = len(x)
    iu = np.triu_indices(n, k=1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    s = float(np.sum(sx * sy))
    n0 = n * (n - 1) / 2
    untied_x = n0 - float(np.sum(sx == 0))
    untied_y = n0 - float(np.sum(sy == 0))
    if untied_x == 0 or untied_y == 0:
        raise AllTied("AllTied: an input has no untied pairs")
    tau = s / math.sqrt(untied_x * untied_y)
    return min(1.0, max(-1.0, tau))


# -- relevance classifier ----------------------------------------------------

@dataclass(frozen=True)
class ClassifierConfig:
    reg: float = 1e-3
    epochs: int = 50
    seed: int = 0


@dataclass
class LinearSVM:
    """Linear soft-margin classifier: ``sign(w . x + b)``."""

    weights: np.ndarray
    bias: float
    config: ClassifierConfig = field(default_factory=ClassifierConfig)

    def decision_function(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != len(self.weights):
            raise DimMismatch(f"classifier expects {len(self.weights)} features, got {x.shape[-1]}")
        out = x @ self.weights + self.bias
        return float(out) if np.ndim(out) == 0 else out

    def predict(self, x) -> str | list[str]:
        dv = self.decision_function(x)
        if isinstance(dv, float):
            return RELEVANT if dv > 0 else IRRELEVANT
        return [RELEVANT if v > 0 else IRRELEVANT for v in dv]


def _binary_labels(labels) -> np.ndarray:
    out = []
    for lab in labels:
        if lab in (True, 1, RELEVANT):
            out.append(1.0)
        elif lab in (False, 0, -1, IRRELEVANT):
            out.append(-1.0)
        else:
            raise ValueError(f"unrecognised label {lab!r}")
    return np.array(out)


def train_relevance_classifier(features, labels, config: ClassifierConfig | None = None) -> LinearSVM:
    """Hinge loss with L2 penalty, minimised by stochastic subgradient steps.

    The step size follows ``1 / (reg * t)``; the bias is a constant
    feature and shares the penalty.  Examples are put into a canonical
    order before the seeded shuffle, so the result does not depend on
    input order.
    """
    config = config or ClassifierConfig()
    X = np.asarray(features, dtype=np.float64)
    y = _binary_labels(labels)
    if X.ndim != 2 or len(X) != len(y):
        raise DimMismatch(f"features {X.shape} do not match {len(y)} labels")
    if len(y) < 2 or len(set(y.tolist())) < 2:
        raise SingleClass("SingleClass: both relevant and irrelevant examples are needed")
    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    X = np.column_stack([X[order], np.ones(len(X))])
    y = y[order]

    rng = np.random.default_rng(config.seed)
    n, d = X.shape
    w = np.zeros(d)
    avg = np.zeros(d)
    lam = config.reg
    t = 0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (X[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * X[i]
            avg += (w - avg) / t
    # the averaged iterate is far less noisy than the last one
    return LinearSVM(avg[:-1].copy(), float(avg[-1]), config)


def accuracy(model: LinearSVM, features, labels) -> float:
    y = _binary_labels(labels)
    dv = np.asarray(model.decision_function(np.asarray(features, dtype=np.float64)))
    return float(np.mean(np.where(dv > 0, 1.0, -1.0) == y))


def kfold_accuracy(features, labels, k: int = 5, config: ClassifierConfig | None = None) -> float:
    """Mean held-out accuracy over ``k`` folds of a seeded shuffle."""
    config = config or ClassifierConfig()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(list(labels), dtype=object)
    if len(X) < k:
        raise ValueError(f"need at least {k} examples for {k}-fold evaluation")
    perm = np.random.default_rng(config.seed).permutation(len(X))
    folds = np.array_split(perm, k)
    correct = 0
    for i in range(k):
        test = folds[i]
        train = np.concatenate([folds[j] for j in range(k) if j != i])
        model = train_relevance_classifier(X[train], y[train], config)
        correct += accuracy(model, X[test], y[test]) * len(test)
    return correct / len(X)


# -- dataset evaluation --------------------------------------------------

@dataclass
class EvalReport:
    pearson_r: float | None
    n_pairs: int
    n_skipped: int = 0
    by_language: dict[str, dict] = field(default_factory=dict)
    accuracy: float | None = None
    dim: int = 0
    mode: str = "none"
    pair_feature: str = "concat"
    classifier: str = "linear-hinge"
    pairs: list[tuple[str, str, float, float]] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def as_lines(self) -> list[str]:
        def fmt(v):
            if v is None:
                return "NA"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        lines = [
            f"mode={self.mode}",
            f"dim={self.dim}",
            f"n_pairs={self.n_pairs}",
            f"n_skipped={self.n_skipped}",
            f"pearson_r={fmt(self.pearson_r)}",
            f"accuracy={fmt(self.accuracy)}",
            f"pair_feature={self.pair_feature}",
            f"classifier={self.classifier}",
        ]
        for key in sorted(self.by_language):
            entry = self.by_language[key]
            lines.append(f"pearson_r[{key}]={fmt(entry['pearson_r'])}")
            lines.append(f"n_pairs[{key}]={entry['n_pairs']}")
        return lines

    def format(self) -> str:
        return "\n".join(self.as_lines()) + "\n"


EmbeddingChoice = EmbeddingSet | Mapping[str, EmbeddingSet]


def _for_language(obj, lang: str, what: str):
    if obj is None or isinstance(obj, (EmbeddingSet, AlignmentModel)):
        return obj
    if lang in obj:
        return obj[lang]
    if "*" in obj:
        return obj["*"]
    raise UnresolvedId(f"UnresolvedId: no {what} for language {lang!r}")


def _is_binary(scores) -> bool:
    return all(s in (0.0, 2.0) for s in scores) and len(set(scores)) == 2


def evaluate_dataset(
    gold: Sequence[JudgmentRecord],
    tweet_docs: Sequence[Document],
    news_docs: Sequence[Document],
    tweet_set: EmbeddingChoice,
    news_set: EmbeddingChoice,
    model: AlignmentModel | Mapping[str, AlignmentModel] | None = None,
    classify: bool | None = None,
    folds: int = 5,
    classifier_config: ClassifierConfig | None = None,
) -> EvalReport:
    """Score every gold pair by cosine of tf-idf document vectors.

    ``tweet_set``/``news_set`` may be a single embedding set or a mapping
    from language tag to set (``"*"`` acts as fallback), which is how
    cross-lingual runs supply per-language spaces.  A ``T2N`` model is
    applied to the tweet side, an ``N2T`` model to the news side; a
    mapping of models is keyed by the language of the transformed side.

    Pairs without a representable document are skipped and listed in the
    report.  If ``classify`` is true, or left as ``None`` and all gold
    scores are 0 or 2, k-fold accuracy of the relevance classifier on
    ``[tweet_vec, news_vec]`` features is also reported.
    """
    tweets = {d.id: d for d in tweet_docs}
    news = {d.id: d for d in news_docs}
    for g in gold:
        if g.tweet_id not in tweets:
            raise UnresolvedId(f"UnresolvedId: tweet {g.tweet_id!r} not in the tweet corpus")
        if g.news_id not in news:
            raise UnresolvedId(f"UnresolvedId: news {g.news_id!r} not in the news corpus")

    tweet_w = tf_idf(tweet_docs)
    news_w = tf_idf(news_docs)
    cache: dict = {}

    def space(side: str, lang: str) -> EmbeddingSet:
        key = (side, lang)
        if key not in cache:
            base = _for_language(tweet_set if side == "tweet" else news_set, lang, f"{side} embeddings")
            m = _for_language(model, lang, "alignment model")
            if m is not None:
                wanted = Direction.T2N if side == "tweet" else Direction.N2T
                if m.direction is wanted:
                    base = apply_alignment(m, base)
            cache[key] = base
        return cache[key]

    vec_cache: dict = {}

    def doc_vec(side: str, doc: Document, lang: str):
        key = (side, doc.id)
        if key not in vec_cache:
            weights = tweet_w if side == "tweet" else news_w
            try:
                vec_cache[key] = doc_embedding(doc, space(side, lang), weights)[0]
            except NoRepresentableTokens:
                vec_cache[key] = None
        return vec_cache[key]

    scored, skipped = [], []
    features, labels = [], []
    dim = 0
    for g in gold:
        tv = doc_vec("tweet", tweets[g.tweet_id], g.tweet_lang)
        nv = doc_vec("news", news[g.news_id], g.news_lang)
        if tv is None or nv is None or not tv.any() or not nv.any():
            skipped.append((g.tweet_id, g.news_id))
            continue
        dim = len(tv)
        sim = cosine(tv, nv)
        scored.append((g, sim))
        features.append(np.concatenate([tv, nv]))
        labels.append(g.score >= 1.0)

    def corr(items) -> float | None:
        if len(items) < 2:
            return None
        try:
            return pearson([s for _, s in items], [g.score for g, _ in items])
        except ZeroVariance:
            return None

    by_lang: dict[str, list] = {}
    for g, s in scored:
        by_lang.setdefault(f"{g.tweet_lang}-{g.news_lang}", []).append((g, s))

    mode = "none"
    if isinstance(model, AlignmentModel):
        mode = model.direction.value
    elif model:
        mode = "/".join(sorted({m.direction.value for m in model.values()}))

    report = EvalReport(
        pearson_r=corr(scored),
        n_pairs=len(scored),
        n_skipped=len(skipped),
        by_language={
            k: {"pearson_r": corr(v), "n_pairs": len(v)} for k, v in sorted(by_lang.items())
        },
        dim=dim,
        mode=mode,
        pairs=[(g.tweet_id, g.news_id, g.score, s) for g, s in scored],
        skipped=skipped,
    )
    if classify is None:
        classify = _is_binary([g.score for g, _ in scored])
    if classify and len(scored) >= folds and len(set(labels)) == 2:
        report.accuracy = kfold_accuracy(features, labels, folds, classifier_config)
    return report


# -- gold files --------------------------------------------------------------

GOLD_COLUMNS = ("tweet_id", "news_id", "tweet_lang", "news_lang", "score")


def read_gold(path: str | os.PathLike) -> list[JudgmentRecord]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise FormatError(f"{path}: empty gold file")
    header = lines[0].split("\t")
    try:
        cols = [header.index(c) for c in GOLD_COLUMNS]
    except ValueError:
        raise FormatError(f"{path}: header must contain {', '.join(GOLD_COLUMNS)}") from None
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        try:
            tid, nid, tl, nl, score = (fields[c] for c in cols)
            out.append(JudgmentRecord(tid, nid, tl, nl, float(score)))
        except (IndexError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return out


def format_gold(records: Sequence[JudgmentRecord]) -> str:
    rows = ["\t".join(GOLD_COLUMNS)]
    for r in records:
        rows.append(f"{r.tweet_id}\t{r.news_id}\t{r.tweet_lang}\t{r.news_lang}\t{r.score!r}")
    return "\n".join(rows) + "\n"


def write_gold(records: Sequence[JudgmentRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_gold(records))
