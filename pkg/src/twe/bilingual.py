"""Joint training of bilingual word embeddings at desk scale.

Each language gets a skip-gram model with negative sampling over its own
monolingual corpus.  Aligned sentence pairs tie the two spaces together
through a penalty on the difference of their mean word vectors, so no
word alignment is needed.

Scheduling: after each monolingual sentence step (one sentence per
language) a single parallel pair is visited, cycling through the parallel
corpus.  With ``lambda_ == 0`` the regularizer is skipped entirely and
each language's result equals :func:`train_monolingual` on the same seed.
"""

from __future__ import annotations

import logging
import math
import os
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embeddings import Collection, EmbeddingSet
from .errors import (
    DimMismatch,
    EmptySentence,
    EmptyVocabulary,
    LengthMismatch,
    NonFiniteLoss,
)
from .text import Document, tokenize

log = logging.getLogger(__name__)

__all__ = [
    "ParallelCorpus",
    "BilingualTrainConfig",
    "TrainReport",
    "regularizer_loss",
    "regularizer_grad",
    "train_bilingual",
    "train_monolingual",
    "read_parallel",
]

_NOISE_POWER = 0.75


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]
    languages: tuple[str, str] = ("l1", "l2")

    def __post_init__(self):
        pairs = tuple((tuple(a), tuple(b)) for a, b in self.pairs)
        if not pairs:
            raise EmptySentence("parallel corpus has no sentence pairs")
        for i, (a, b) in enumerate(pairs):
            if not a or not b:
                raise EmptySentence(f"parallel pair {i} has an empty side")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "languages", tuple(self.languages))

    def __len__(self):
        return len(self.pairs)


def read_parallel(
    path_l1: str | os.PathLike,
    path_l2: str | os.PathLike,
    languages: tuple[str, str] = ("l1", "l2"),
) -> ParallelCorpus:
    """Line-aligned plain-text files; pairs with an empty side are skipped."""
    with open(path_l1, encoding="utf-8") as fh:
        lines1 = fh.read().splitlines()
    with open(path_l2, encoding="utf-8") as fh:
        lines2 = fh.read().splitlines()
    if len(lines1) != len(lines2):
        raise LengthMismatch(
            f"parallel files have {len(lines1)} and {len(lines2)} lines"
        )
    pairs = []
    skipped = 0
    for a, b in zip(lines1, lines2):
        ta, tb = tokenize(a), tokenize(b)
        if ta and tb:
            pairs.append((ta, tb))
        else:
            skipped += 1
    if skipped:
        log.info("skipped %d parallel pairs with an empty side", skipped)
    return ParallelCorpus(tuple(pairs), languages)


@dataclass(frozen=True)
class BilingualTrainConfig:
    dim: int = 40
    window: int = 5
    min_count: int = 2
    lambda_: float = 1.0
    epochs: int = 5
    learning_rate: float = 0.025
    negative_samples: int = 5
    seed: int = 1
    left_only: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if not self.lambda_ >= 0:
            raise ValueError("lambda must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.negative_samples < 0:
            raise ValueError("negative_samples must be >= 0")


@dataclass
class TrainReport:
    mono_loss: dict[str, list[float]] = field(default_factory=dict)
    reg_loss: list[float] = field(default_factory=list)
    vocab_sizes: dict[str, int] = field(default_factory=dict)
    window_mode: str = "symmetric"

    def as_dict(self) -> dict:
        return asdict(self)


# -- cross-lingual regularizer ------------------------------------------------

def _as_matrix(vectors) -> np.ndarray:
    m = np.asarray(vectors, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1) if m.size else m.reshape(0, 0)
    if m.shape[0] == 0:
        raise EmptySentence("EmptySentence: a sentence has no word vectors")
    return m


def regularizer_loss(sent1_vectors, sent2_vectors, lambda_: float) -> float:
    """``lambda/2 * ||mean(sent1) - mean(sent2)||^2``."""
    a, b = _as_matrix(sent1_vectors), _as_matrix(sent2_vectors)
    if a.shape[1] != b.shape[1]:
        raise DimMismatch(f"vector dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    delta = a.mean(axis=0) - b.mean(axis=0)
    return 0.5 * lambda_ * float(delta @ delta)


def regularizer_grad(sent1_vectors, sent2_vectors, lambda_: float):
    """Gradients of :func:`regularizer_loss` w.r.t. every input vector."""
    a, b = _as_matrix(sent1_vectors), _as_matrix(sent2_vectors)
    if a.shape[1] != b.shape[1]:
        raise DimMismatch(f"vector dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    delta = a.mean(axis=0) - b.mean(axis=0)
    g1 = np.tile(lambda_ / a.shape[0] * delta, (a.shape[0], 1))
    g2 = np.tile(-lambda_ / b.shape[0] * delta, (b.shape[0], 1))
    return g1, g2


# -- skip-gram with negative sampling ------------------------------------------

def _build_vocab(sentences: Iterable[Sequence[str]], min_count: int) -> tuple[list[str], np.ndarray]:
    counts: Counter = Counter()
    for s in sentences:
        counts.update(s)
    # Counter preserves first-occurrence order, so the sort is deterministic
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: -counts[t],
    )
    return kept, np.array([counts[t] for t in kept], dtype=np.float64)


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(_log_sigmoid(x))


class _SkipGram:
    """One language's SGNS parameters and its private random stream."""

    def __init__(self, tokens, counts, sentences, config: BilingualTrainConfig, slot: int):
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}
        self.cfg = config
        self.rng = np.random.default_rng([config.seed, slot])
        d = config.dim
        self.w_in = self.rng.uniform(-0.5 / d, 0.5 / d, size=(len(tokens), d))
        self.w_out = np.zeros((len(tokens), d))
        noise = counts ** _NOISE_POWER
        self.noise_cdf = np.cumsum(noise / noise.sum())
        self.sentences = [s for s in (self.encode(x) for x in sentences) if len(s) > 1]
        self.total_words = max(1, sum(len(s) for s in self.sentences)) * config.epochs
        self.words_done = 0
        self._pairs_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.index[t] for t in tokens if t in self.index], dtype=np.int64)

    @property
    def lr(self) -> float:
        frac = 1.0 - self.words_done / self.total_words
        return self.cfg.learning_rate * max(1e-4, frac)

    def _positions(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        cached = self._pairs_cache.get(n)
        if cached is None:
            w = self.cfg.window
            centers, contexts = [], []
            for i in range(n):
                lo, hi = max(0, i - w), i if self.cfg.left_only else min(n, i + w + 1)
                for j in range(lo, hi):
                    if j != i:
                        centers.append(i)
                        contexts.append(j)
            cached = (np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64))
            self._pairs_cache[n] = cached
        return cached

    def train_sentence(self, ids: np.ndarray) -> tuple[float, int]:
        ci, oi = self._positions(len(ids))
        lr = self.lr
        self.words_done += len(ids)
        if len(ci) == 0:
            return 0.0, 0
        centers, contexts = ids[ci], ids[oi]
        k = self.cfg.negative_samples
        negs = np.searchsorted(self.noise_cdf, self.rng.random((len(centers), k)), side="right")
        negs = np.minimum(negs, len(self.tokens) - 1)

        h = self.w_in[centers]
        pos = self.w_out[contexts]
        neg = self.w_out[negs]
        s_pos = np.einsum("ij,ij->i", h, pos)
        s_neg = np.einsum("ikj,ij->ik", neg, h)
        loss = float(-_log_sigmoid(s_pos).sum() - _log_sigmoid(-s_neg).sum())

        g_pos = _sigmoid(s_pos) - 1.0
        g_neg = _sigmoid(s_neg)
        grad_h = g_pos[:, None] * pos + np.einsum("ik,ikj->ij", g_neg, neg)
        np.add.at(self.w_out, contexts, -lr * g_pos[:, None] * h)
        np.add.at(self.w_out, negs.ravel(), (-lr * g_neg[:, :, None] * h[:, None, :]).reshape(-1, h.shape[1]))
        np.add.at(self.w_in, centers, -lr * grad_h)
        return loss, len(centers)

    def embedding_set(self, language: str) -> EmbeddingSet:
        return EmbeddingSet(tuple(self.tokens), self.w_in, language, Collection.NEWS)


def _sentences(corpus: Iterable[Document] | Iterable[Sequence[str]]) -> list[tuple[str, ...]]:
    out = []
    for item in corpus:
        if isinstance(item, Document):
            if not item.dropped:
                out.append(item.tokens)
        else:
            out.append(tuple(item))
    return out


def _make_model(corpus, config: BilingualTrainConfig, slot: int, name: str) -> _SkipGram:
    sentences = _sentences(corpus)
    tokens, counts = _build_vocab(sentences, config.min_count)
    if not tokens:
        raise EmptyVocabulary(
            f"EmptyVocabulary: no {name} tokens occur at least {config.min_count} times"
        )
    return _SkipGram(tokens, counts, sentences, config, slot)


def _check_loss(value: float, epoch: int, what: str) -> float:
    if not math.isfinite(value):
        raise NonFiniteLoss(f"NonFiniteLoss: {what} loss diverged in epoch {epoch + 1}")
    return value


def train_monolingual(
    corpus, config: BilingualTrainConfig, language: str = "und", slot: int = 0
) -> tuple[EmbeddingSet, list[float]]:
    """Plain SGNS training; ``slot`` selects the random stream (0 for l1, 1 for l2)."""
    model = _make_model(corpus, config, slot, language)
    losses = []
    for epoch in range(config.epochs):
        total, n = 0.0, 0
        for ids in model.sentences:
            l, c = model.train_sentence(ids)
            total += l
            n += c
        losses.append(_check_loss(total / max(n, 1), epoch, language))
        log.info("epoch %d %s loss %.6f", epoch + 1, language, losses[-1])
    return model.embedding_set(language), losses


def train_bilingual(
    corpus_l1,
    corpus_l2,
    parallel: ParallelCorpus,
    config: BilingualTrainConfig,
) -> tuple[EmbeddingSet, EmbeddingSet, TrainReport]:
    """Train both languages jointly; returns their embeddings in one shared space."""
    l1, l2 = parallel.languages
    m1 = _make_model(corpus_l1, config, 0, l1)
    m2 = _make_model(corpus_l2, config, 1, l2)
    report = TrainReport(
        mono_loss={l1: [], l2: []},
        vocab_sizes={l1: len(m1.tokens), l2: len(m2.tokens)},
        window_mode="left" if config.left_only else "symmetric",
    )
    lam = config.lambda_
    enc_pairs = []
    if lam > 0:
        for a, b in parallel.pairs:
            ia, ib = m1.encode(a), m2.encode(b)
            if len(ia) and len(ib):
                enc_pairs.append((ia, ib))
        if not enc_pairs:
            log.warning("no parallel pair survives vocabulary filtering; regularizer inactive")
    p_next = 0
    steps = max(len(m1.sentences), len(m2.sentences))
    for epoch in range(config.epochs):
        tot = {l1: 0.0, l2: 0.0}
        cnt = {l1: 0, l2: 0}
        reg_total, reg_n = 0.0, 0
        for step in range(steps):
            for lang, m in ((l1, m1), (l2, m2)):
                if step < len(m.sentences):
                    l, c = m.train_sentence(m.sentences[step])
                    tot[lang] += l
                    cnt[lang] += c
            if lam > 0 and enc_pairs:
                ia, ib = enc_pairs[p_next % len(enc_pairs)]
                p_next += 1
                reg_total += _regularizer_step(m1, m2, ia, ib, lam)
                reg_n += 1
        for lang in (l1, l2):
            report.mono_loss[lang].append(
                _check_loss(tot[lang] / max(cnt[lang], 1), epoch, lang)
            )
        report.reg_loss.append(_check_loss(reg_total / max(reg_n, 1), epoch, "regularizer"))
        log.info(
            "epoch %d loss %s=%.6f %s=%.6f reg=%.6f",
            epoch + 1, l1, report.mono_loss[l1][-1], l2, report.mono_loss[l2][-1],
            report.reg_loss[-1],
        )
    return m1.embedding_set(l1), m2.embedding_set(l2), report


def _regularizer_step(m1: _SkipGram, m2: _SkipGram, ia, ib, lam: float) -> float:
    lr = 0.5 * (m1.lr + m2.lr)
    delta = m1.w_in[ia].mean(axis=0) - m2.w_in[ib].mean(axis=0)
    loss = 0.5 * lam * float(delta @ delta)
    np.add.at(m1.w_in, ia, -lr * lam / len(ia) * delta)
    np.add.at(m2.w_in, ib, lr * lam / len(ib) * delta)
    return loss
