"""Synthetic fixtures: toy bilingual corpora, related embedding pairs and
the bundled mini evaluation dataset."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .alignment import AlignmentModel, Direction, apply_alignment
from .embeddings import Collection, EmbeddingSet, save_embeddings

__all__ = [
    "random_orthogonal",
    "toy_topic_corpus",
    "renamed_copy",
    "related_pair",
    "build_mini_dataset",
    "MINI_DIR",
]

MINI_DIR = Path(__file__).parent / "data" / "mini"


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def toy_topic_corpus(
    n_sentences: int = 600,
    n_topics: int = 6,
    words_per_topic: int = 10,
    sentence_len: int = 8,
    prefix: str = "en",
    seed: int = 0,
) -> list[list[str]]:
    """Sentences whose words are all drawn from one randomly chosen topic."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sentences):
        topic = int(rng.integers(n_topics))
        ids = topic * words_per_topic + rng.integers(words_per_topic, size=sentence_len)
        out.append([f"{prefix}{i}" for i in ids])
    return out


def renamed_copy(sentences, old: str = "en", new: str = "de") -> list[list[str]]:
    return [[new + t[len(old):] for t in s] for s in sentences]


def related_pair(
    n: int,
    d: int,
    noise: float = 0.01,
    seed: int = 0,
    scale_range: tuple[float, float] = (0.5, 2.0),
    n_clusters: int | None = None,
):
    """A source set and a target set related by a similarity transform plus noise.

    ``noise`` is relative to the RMS entry of the transformed source.
    Returns ``(source, target, true_model)``.
    """
    rng = np.random.default_rng(seed)
    if n_clusters:
        centers = rng.standard_normal((n_clusters, d)) * 2.0
        S = centers[rng.integers(n_clusters, size=n)] + rng.standard_normal((n, d))
    else:
        S = rng.standard_normal((n, d))
    S = S + rng.standard_normal(d) * 3.0
    Q = random_orthogonal(d, rng)
    j = float(rng.uniform(*scale_range))
    mu_t = rng.standard_normal(d)
    model = AlignmentModel(S.mean(axis=0), mu_t, j, Q, Direction.T2N, 0.0)
    T = model.transform(S)
    rms = math.sqrt(float(np.mean((T - mu_t) ** 2)))
    T = T + rng.standard_normal(T.shape) * noise * rms
    tokens = tuple(f"w{i}" for i in range(n))
    source = EmbeddingSet(tokens, S, "en", Collection.TWEET)
    target = EmbeddingSet(tokens, T, "en", Collection.NEWS)
    return source, target, model


# -- bundled mini dataset --------------------------------------------------

def _topic_vocab(n_topics: int, per_topic: int) -> list[list[str]]:
    return [[f"topic{t}word{w}" for w in range(per_topic)] for t in range(n_topics)]


def build_mini_dataset(out_dir: str | os.PathLike, seed: int = 7, noise: float = 0.05) -> dict:
    """Write a 20-pair tweet/news evaluation fixture into ``out_dir``.

    Tweet and news embeddings are related by a known similarity transform.
    Gold scores are ``1 + cos`` of the tf-idf document vectors computed in
    the correctly aligned geometry, plus Gaussian noise, clipped to [0, 2].
    """
    from .scoring import cosine
    from .text import doc_embedding, preprocess, tf_idf

    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_topics, per_topic, d = 5, 12, 10
    vocab = _topic_vocab(n_topics, per_topic)
    centers = rng.standard_normal((n_topics, d)) * 2.0
    tokens, rows = [], []
    for t in range(n_topics):
        for w in vocab[t]:
            tokens.append(w)
            rows.append(centers[t] + rng.standard_normal(d) * 0.6)
    tweet_set = EmbeddingSet(tuple(tokens), np.array(rows), "en", Collection.TWEET)
    Q = random_orthogonal(d, rng)
    true_model = AlignmentModel(
        tweet_set.matrix.mean(axis=0), rng.standard_normal(d), 1.5, Q, Direction.T2N, 0.0
    )
    news_set = apply_alignment(true_model, tweet_set)
    news_set = EmbeddingSet(news_set.tokens, news_set.matrix, "en", Collection.NEWS)

    def text_for(topic_weights, length):
        words = []
        for _ in range(length):
            t = int(rng.choice(n_topics, p=topic_weights))
            words.append(vocab[t][int(rng.integers(per_topic))])
        return " ".join(words)

    tweets, news = [], []
    for i in range(10):
        main = i % n_topics
        w = np.full(n_topics, 0.05)
        w[main] = 0.8
        tweets.append({"id": f"t{i}", "text": text_for(w / w.sum(), 8), "lang": "en", "kind": "tweet"})
    for i in range(10):
        main = i % n_topics
        w = np.full(n_topics, 0.05)
        w[main] = 0.8
        news.append({"id": f"n{i}", "text": text_for(w / w.sum(), 30), "lang": "en", "kind": "news"})

    # 20 pairs: every tweet against its same-topic article and one other article
    pairs = []
    for i in range(10):
        pairs.append((f"t{i}", f"n{i}"))
        other = (i + 1 + int(rng.integers(9))) % 10
        pairs.append((f"t{i}", f"n{other}"))

    tdocs = {r["id"]: preprocess(r["text"], "tweet", "en", r["id"]) for r in tweets}
    ndocs = {r["id"]: preprocess(r["text"], "news", "en", r["id"]) for r in news}
    tw = tf_idf(tdocs.values())
    nw = tf_idf(ndocs.values())
    aligned = apply_alignment(true_model, tweet_set)
    gold_rows = []
    for tid, nid in pairs:
        tv, _ = doc_embedding(tdocs[tid], aligned, tw)
        nv, _ = doc_embedding(ndocs[nid], news_set, nw)
        score = 1.0 + cosine(tv, nv) + rng.normal(0.0, noise)
        gold_rows.append((tid, nid, min(2.0, max(0.0, score))))

    with open(out / "tweets.jsonl", "w", encoding="utf-8") as fh:
        for r in tweets:
            fh.write(json.dumps(r) + "\n")
    with open(out / "news.jsonl", "w", encoding="utf-8") as fh:
        for r in news:
            fh.write(json.dumps(r) + "\n")
    with open(out / "gold.tsv", "w", encoding="utf-8") as fh:
        fh.write("tweet_id\tnews_id\ttweet_lang\tnews_lang\tscore\n")
        for tid, nid, s in gold_rows:
            fh.write(f"{tid}\t{nid}\ten\ten\t{s:.6f}\n")
    save_embeddings(tweet_set, out / "tweets.vec")
    save_embeddings(news_set, out / "news.vec")
    return {"pairs": len(gold_rows), "dim": d, "seed": seed, "noise": noise}
