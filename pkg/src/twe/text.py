"""Tweet/news preprocessing, tf-idf weights and document vectors."""

from __future__ import annotations

import json
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingSet
from .errors import EmptyCorpus, FormatError, NoRepresentableTokens

__all__ = [
    "Document",
    "WeightedVocabulary",
    "preprocess",
    "tokenize",
    "tf_idf",
    "doc_embedding",
    "read_corpus",
    "format_token_dump",
]

URL_RE = re.compile(r"https?://\S*")
MENTION_RE = re.compile(r"@\w+")
# letters and digits only; underscore counts as a separator
TOKEN_RE = re.compile(r"[^\W_]+")
KINDS = ("tweet", "news")


@dataclass(frozen=True)
class Document:
    id: str
    language: str
    kind: str
    raw: str
    tokens: tuple[str, ...]
    dropped: bool = False


def tokenize(text: str) -> list[str]:
    return TOKEN_RE.findall(text.lower())


def is_retweet(raw: str) -> bool:
    return raw.lstrip().startswith("RT @")


def preprocess(raw: str, kind: str = "tweet", language: str = "und", id: str = "") -> Document:
    """Clean and tokenise one document.

    Tweets lose URLs, @-mentions and the ``#`` of hashtags, and retweets
    are flagged as dropped.  Both kinds are lowercased and split on any
    character that is not a letter or digit.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    text = raw
    dropped = False
    if kind == "tweet":
        dropped = is_retweet(raw)
        text = URL_RE.sub(" ", text)
        text = MENTION_RE.sub(" ", text)
        text = text.replace("#", "")
    return Document(id, language, kind, raw, tuple(tokenize(text)), dropped)


@dataclass
class WeightedVocabulary:
    """tf-idf statistics of one corpus.

    ``weights`` maps document id to its token weights.  Weights for texts
    outside the corpus can still be computed with :meth:`weights_for`;
    unseen tokens then get the maximal idf.
    """

    n_docs: int
    df: dict[str, int]
    weights: dict[str, dict[str, float]] = field(default_factory=dict)

    def idf(self, token: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df.get(token, 0))) + 1.0

    def weights_for(self, doc: Document) -> dict[str, float]:
        cached = self.weights.get(doc.id)
        if cached is not None:
            return cached
        return {t: c * self.idf(t) for t, c in Counter(doc.tokens).items()}


def tf_idf(corpus: Iterable[Document]) -> WeightedVocabulary:
    """Raw term frequency times smoothed idf, ``ln((1+N)/(1+df)) + 1``."""
    docs = [d for d in corpus if not d.dropped]
    if not docs:
        raise EmptyCorpus("EmptyCorpus: no documents to weight")
    df: Counter = Counter()
    for doc in docs:
        df.update(set(doc.tokens))
    wv = WeightedVocabulary(len(docs), dict(df))
    for doc in docs:
        wv.weights[doc.id] = {t: c * wv.idf(t) for t, c in Counter(doc.tokens).items()}
    return wv


def doc_embedding(
    doc: Document, emb: EmbeddingSet, weights: WeightedVocabulary
) -> tuple[np.ndarray, float]:
    """tf-idf weighted mean of the document's in-vocabulary word vectors.

    Returns the vector and the fraction of token occurrences that were
    found in ``emb``.
    """
    if doc.dropped:
        raise ValueError(f"document {doc.id!r} was dropped during preprocessing")
    w = weights.weights_for(doc)
    counts = Counter(doc.tokens)
    covered = 0
    total_w = 0.0
    acc = np.zeros(emb.dim)
    # first-occurrence order keeps the floating-point sum reproducible
    for tok in counts:
        vec = emb.vector(tok)
        if vec is None:
            continue
        covered += counts[tok]
        acc += w[tok] * vec
        total_w += w[tok]
    if covered == 0 or total_w <= 0.0:
        raise NoRepresentableTokens(
            f"NoRepresentableTokens: document {doc.id!r} has no in-vocabulary tokens"
        )
    return acc / total_w, covered / len(doc.tokens)


# -- corpus files --------------------------------------------------------------

def parse_corpus(lines: Iterable[str], source: str = "<input>") -> list[Document]:
    docs = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            doc_id, text, lang, kind = (
                str(obj["id"]), obj["text"], obj["lang"], obj["kind"]
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{source}:{lineno}: bad corpus record ({exc})") from None
        if not isinstance(text, str):
            raise FormatError(f"{source}:{lineno}: text must be a string")
        if kind not in KINDS:
            raise FormatError(f"{source}:{lineno}: kind must be 'tweet' or 'news'")
        if doc_id in seen:
            raise FormatError(f"{source}:{lineno}: duplicate id {doc_id!r}")
        seen.add(doc_id)
        docs.append(preprocess(text, kind, lang, doc_id))
    return docs


def read_corpus(path: str | os.PathLike) -> list[Document]:
    """Read a JSON-Lines corpus (fields id, text, lang, kind) and preprocess it."""
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, str(path))


def format_token_dump(docs: Sequence[Document], include_dropped: bool = False) -> str:
    lines = [
        f"{d.id}\t{' '.join(d.tokens)}\n"
        for d in docs
        if include_dropped or not d.dropped
    ]
    return "".join(lines)
