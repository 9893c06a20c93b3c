"""Command-line entry point.

Exit status is 0 on success, 1 on an operational error (missing file,
no shared vocabulary, ...) and 2 on a usage error.  Outputs are staged in
temporary files and renamed only once the whole command has succeeded;
every output gets a ``<output>.meta.json`` record of the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .alignment import (
    AlignmentModel,
    Direction,
    apply_alignment,
    common_vocab,
    dumps_model,
    load_model,
    procrustes_fit,
)
from .bilingual import BilingualTrainConfig, read_parallel, train_bilingual
from .embeddings import Collection, EmbeddingSet, format_embeddings, load_embeddings
from .errors import TWEError, UnresolvedId
from .lexical import nearest_neighbors, rbo_table
from .scoring import ClassifierConfig, cosine, evaluate_dataset, read_gold
from .text import doc_embedding, format_token_dump, read_corpus, tf_idf

log = logging.getLogger("twe")

RUN_CHOICES = {
    "lowercase": True,
    "tfidf": "raw tf * (ln((1+N)/(1+df)) + 1), per collection",
    "rbo": "extrapolated unless --variant min",
    "pair_feature": "concat(tweet_vec, news_vec)",
}


class UsageError(Exception):
    pass


# -- argument types ------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = _nonneg_float(text)
    if v == 0.0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _vector_spec(text: str) -> dict[str, str]:
    """``PATH``, ``LANG=PATH`` or a comma-separated list of ``LANG=PATH``."""
    out = {}
    for part in text.split(","):
        if not part:
            raise argparse.ArgumentTypeError(f"empty entry in {text!r}")
        lang, sep, path = part.partition("=")
        if not sep:
            lang, path = "*", part
        if not lang or not path:
            raise argparse.ArgumentTypeError(f"bad vector spec {part!r}")
        out[lang] = path
    return out


# -- output staging ----------------------------------------------------------

def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Outputs:
    """Collects output texts and commits them atomically at the end."""

    def __init__(self, args: argparse.Namespace, inputs: list[str]):
        self.args = args
        self.inputs = inputs
        self.files: dict[str, str] = {}
        self.extra_meta: dict = {}

    def add(self, path: str | None, text: str) -> None:
        if path is None or path == "-":
            sys.stdout.write(text)
        else:
            self.files[path] = text

    def _meta(self) -> str:
        params = {
            k: v for k, v in sorted(vars(self.args).items())
            if k not in ("func",) and not k.startswith("_")
        }
        record = {
            "command": self.args._command,
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(),
            "parameters": params,
            "seed": params.get("seed"),
            "inputs": {p: _digest(p) for p in self.inputs},
            "choices": RUN_CHOICES,
            **self.extra_meta,
        }
        return json.dumps(record, indent=1, sort_keys=True, default=str) + "\n"

    def commit(self) -> None:
        staged = []
        try:
            for path, text in self.files.items():
                for target, body in ((path, text), (path + ".meta.json", self._meta())):
                    directory = os.path.dirname(os.path.abspath(target))
                    fd, tmp = tempfile.mkstemp(prefix=".twe-", dir=directory)
                    with os.fdopen(fd, "w", encoding="utf-8") as fh:
                        fh.write(body)
                    staged.append((tmp, target))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, target in staged:
            os.replace(tmp, target)


def _flatten_inputs(*items) -> list[str]:
    out = []
    for item in items:
        if item is None:
            continue
        if isinstance(item, dict):
            out.extend(item.values())
        elif isinstance(item, (list, tuple)):
            out.extend(_flatten_inputs(*item))
        else:
            out.append(item)
    return out


def _check_inputs(paths: list[str]) -> None:
    for p in paths:
        if not os.path.isfile(p):
            raise FileNotFoundError(f"input file not found: {p}")


# -- helpers shared by subcommands ------------------------------------------------

def _load_space(spec: dict[str, str], collection: Collection) -> dict[str, EmbeddingSet]:
    return {
        lang: load_embeddings(path, "und" if lang == "*" else lang, collection)
        for lang, path in spec.items()
    }


def _single(spaces: dict[str, EmbeddingSet]):
    return spaces["*"] if set(spaces) == {"*"} else spaces


def _fit_models(mode: str, tweets: dict, news: dict, top_f) -> dict[str, AlignmentModel] | None:
    """One model per language of the side being transformed."""
    if mode == "none":
        return None
    direction = Direction.parse(mode)
    moving, fixed = (tweets, news) if direction is Direction.T2N else (news, tweets)
    models = {}
    for lang, space in moving.items():
        other = fixed.get(lang, fixed.get("*"))
        if other is None:
            raise UnresolvedId(f"UnresolvedId: no same-language space for {lang!r} to align with")
        tweet_side, news_side = (space, other) if direction is Direction.T2N else (other, space)
        models[lang] = procrustes_fit(common_vocab(tweet_side, news_side, top_f), direction)
    return models


def _models_arg(models):
    if models is None:
        return None
    if set(models) == {"*"}:
        return models["*"]
    return models


# -- subcommands ---------------------------------------------------------------

def cmd_preprocess(args, out: Outputs) -> None:
    docs = read_corpus(args.input)
    out.add(args.out, format_token_dump(docs, include_dropped=args.include_dropped))
    out.extra_meta["documents"] = len(docs)
    out.extra_meta["dropped"] = sum(d.dropped for d in docs)


def cmd_train_bilingual(args, out: Outputs) -> None:
    l1, l2 = args.lang_l1, args.lang_l2
    corpus1 = read_corpus(args.corpus_l1)
    corpus2 = read_corpus(args.corpus_l2)
    parallel = read_parallel(args.parallel_l1, args.parallel_l2, (l1, l2))
    config = BilingualTrainConfig(
        dim=args.dim,
        window=args.window,
        min_count=args.min_count,
        lambda_=args.lam,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        negative_samples=args.negative,
        seed=args.seed,
        left_only=args.left_only,
    )
    e1, e2, report = train_bilingual(corpus1, corpus2, parallel, config)
    out.add(args.out_l1, format_embeddings(e1))
    out.add(args.out_l2, format_embeddings(e2))
    out.extra_meta["train_report"] = report.as_dict()
    if args.report:
        lines = [f"epoch\tloss_{l1}\tloss_{l2}\tloss_regularizer\n"]
        for i in range(config.epochs):
            lines.append(
                f"{i + 1}\t{report.mono_loss[l1][i]!r}\t{report.mono_loss[l2][i]!r}\t"
                f"{report.reg_loss[i]!r}\n"
            )
        out.add(args.report, "".join(lines))


def cmd_align_fit(args, out: Outputs) -> None:
    tweets = load_embeddings(args.source, args.source_lang, Collection.TWEET, args.source_counts)
    news = load_embeddings(args.target, args.target_lang, Collection.NEWS, args.target_counts)
    pairs = common_vocab(tweets, news, args.top_f)
    model = procrustes_fit(pairs, args.mode)
    out.add(args.out, dumps_model(model))
    out.extra_meta["common_tokens"] = len(pairs)
    out.extra_meta["residual"] = model.residual


def cmd_align_apply(args, out: Outputs) -> None:
    model = load_model(args.model)
    collection = Collection.TWEET if model.direction is Direction.T2N else Collection.NEWS
    emb = load_embeddings(args.input, args.lang, collection)
    out.add(args.out, format_embeddings(apply_alignment(model, emb)))


def cmd_rbo(args, out: Outputs) -> None:
    source = load_embeddings(args.source, "und", Collection.TWEET)
    target = load_embeddings(args.target, "und", Collection.NEWS)
    pairs = common_vocab(source, target, args.top_f)
    tokens = list(pairs.tokens)
    before = rbo_table(source, target, tokens, args.persistence, args.depth, args.variant)
    after = None
    if args.model:
        model = load_model(args.model)
        if model.direction is Direction.T2N:
            after = rbo_table(apply_alignment(model, source), target, tokens,
                              args.persistence, args.depth, args.variant)
        else:
            after = rbo_table(source, apply_alignment(model, target), tokens,
                              args.persistence, args.depth, args.variant)
    lines = ["token\trbo_before" + ("\trbo_after" if after else "") + "\n"]
    for i, tok in enumerate(tokens):
        row = f"{tok}\t{before[i]!r}"
        if after:
            row += f"\t{after[i]!r}"
        lines.append(row + "\n")
    mean_before = sum(before) / len(before)
    summary = f"# mean_rbo_before={mean_before!r}"
    if after:
        mean_after = sum(after) / len(after)
        summary += f"\tmean_rbo_after={mean_after!r}"
        if mean_before > 0:
            summary += f"\trelative_change={(mean_after - mean_before) / mean_before!r}"
    lines.append(summary + "\n")
    out.add(args.out, "".join(lines))


def cmd_neighbors(args, out: Outputs) -> None:
    emb = load_embeddings(args.embeddings)
    lines = ["query\trank\ttoken\tcosine\n"]
    for q in args.query:
        ranked = nearest_neighbors(emb, q, args.depth)
        qv = emb.vector(q)
        for r, tok in enumerate(ranked.items, start=1):
            try:
                c = cosine(qv, emb.vector(tok))
            except TWEError:
                c = 0.0
            lines.append(f"{q}\t{r}\t{tok}\t{c!r}\n")
    out.add(args.out, "".join(lines))


def _load_eval_inputs(args):
    tweets = read_corpus(args.tweets)
    news = read_corpus(args.news)
    tweet_spaces = _load_space(args.tweet_vectors, Collection.TWEET)
    news_spaces = _load_space(args.news_vectors, Collection.NEWS)
    return tweets, news, tweet_spaces, news_spaces


def _resolve_models(args, tweet_spaces, news_spaces):
    if getattr(args, "model", None):
        model = load_model(args.model)
        if args.mode not in (None, model.direction.value.lower()):
            raise UsageError(f"--mode {args.mode} conflicts with model direction {model.direction.value}")
        return model
    return _models_arg(_fit_models(args.mode or "none", tweet_spaces, news_spaces, args.top_f))


def cmd_docsim(args, out: Outputs) -> None:
    tweets, news, tweet_spaces, news_spaces = _load_eval_inputs(args)
    models = _resolve_models(args, tweet_spaces, news_spaces)
    tw_docs = [d for d in tweets if not d.dropped]
    nw_docs = [d for d in news if not d.dropped]
    tw_w, nw_w = tf_idf(tw_docs), tf_idf(nw_docs)
    tweet_by_id = {d.id: d for d in tw_docs}
    news_by_id = {d.id: d for d in nw_docs}
    if args.pairs:
        pairs = [(g.tweet_id, g.news_id) for g in read_gold(args.pairs)]
    else:
        pairs = [(t.id, n.id) for t in tw_docs for n in nw_docs]

    def space(spaces, lang, wanted):
        base = spaces.get(lang, spaces.get("*"))
        if base is None:
            raise UnresolvedId(f"UnresolvedId: no embeddings for language {lang!r}")
        m = models if isinstance(models, AlignmentModel) or models is None else models.get(lang)
        if m is not None and m.direction is wanted:
            base = apply_alignment(m, base)
        return base

    lines = ["tweet_id\tnews_id\tcosine\n"]
    for tid, nid in pairs:
        if tid not in tweet_by_id or nid not in news_by_id:
            raise UnresolvedId(f"UnresolvedId: pair ({tid}, {nid}) references an unknown document")
        t, n = tweet_by_id[tid], news_by_id[nid]
        try:
            tv, _ = doc_embedding(t, space(tweet_spaces, t.language, Direction.T2N), tw_w)
            nv, _ = doc_embedding(n, space(news_spaces, n.language, Direction.N2T), nw_w)
            value = repr(cosine(tv, nv))
        except TWEError as exc:
            if isinstance(exc, UnresolvedId):
                raise
            value = "NA"
        lines.append(f"{tid}\t{nid}\t{value}\n")
    out.add(args.out, "".join(lines))


def _classify_flag(value: str):
    return {"auto": None, "yes": True, "no": False}[value]


def cmd_evaluate(args, out: Outputs) -> None:
    gold = read_gold(args.gold)
    tweets, news, tweet_spaces, news_spaces = _load_eval_inputs(args)
    models = _resolve_models(args, tweet_spaces, news_spaces)
    report = evaluate_dataset(
        gold,
        [d for d in tweets if not d.dropped],
        [d for d in news if not d.dropped],
        _single(tweet_spaces),
        _single(news_spaces),
        models,
        classify=_classify_flag(args.classify),
        folds=args.folds,
        classifier_config=ClassifierConfig(seed=args.seed),
    )
    text = report.format()
    out.add(args.out, text)
    if args.pairs_out:
        rows = ["tweet_id\tnews_id\tgold\tpredicted\n"]
        rows += [f"{t}\t{n}\t{g!r}\t{p!r}\n" for t, n, g, p in report.pairs]
        rows += [f"{t}\t{n}\tNA\tNA\n" for t, n in report.skipped]
        out.add(args.pairs_out, "".join(rows))


def cmd_sweep(args, out: Outputs) -> None:
    if len(args.tweet_vectors) != len(args.news_vectors):
        raise UsageError("--tweet-vectors and --news-vectors need the same number of entries")
    gold = read_gold(args.gold)
    tweets = [d for d in read_corpus(args.tweets) if not d.dropped]
    news = [d for d in read_corpus(args.news) if not d.dropped]
    lines = ["dim\tmode\tpearson_r\tn_pairs\tn_skipped\taccuracy\n"]
    for tspec, nspec in zip(args.tweet_vectors, args.news_vectors):
        tweet_spaces = _load_space(tspec, Collection.TWEET)
        news_spaces = _load_space(nspec, Collection.NEWS)
        for mode in args.modes:
            models = _models_arg(_fit_models(mode, tweet_spaces, news_spaces, args.top_f))
            rep = evaluate_dataset(
                gold, tweets, news, _single(tweet_spaces), _single(news_spaces), models,
                classify=_classify_flag(args.classify),
                folds=args.folds,
                classifier_config=ClassifierConfig(seed=args.seed),
            )
            dim = next(iter(tweet_spaces.values())).dim
            fmt = lambda v: "NA" if v is None else repr(v)  # noqa: E731
            lines.append(
                f"{dim}\t{mode}\t{fmt(rep.pearson_r)}\t{rep.n_pairs}\t{rep.n_skipped}\t"
                f"{fmt(rep.accuracy)}\n"
            )
    out.add(args.out, "".join(lines))


# -- parser ----------------------------------------------------------------

def _modes(text: str) -> list[str]:
    modes = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in modes if m not in ("none", "t2n", "n2t")]
    if bad or not modes:
        raise argparse.ArgumentTypeError(f"modes must be drawn from none,t2n,n2t; got {text!r}")
    return modes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twe",
        description="Align tweet and news word embeddings and score tweet-news relevance.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("preprocess", help="clean and tokenise a JSON-Lines corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include-dropped", action="store_true", help="also dump retweets")
    p.set_defaults(func=cmd_preprocess, _inputs=["input"])

    p = sub.add_parser("train-bilingual", help="jointly train bilingual embeddings")
    p.add_argument("--corpus-l1", required=True)
    p.add_argument("--corpus-l2", required=True)
    p.add_argument("--parallel-l1", required=True)
    p.add_argument("--parallel-l2", required=True)
    p.add_argument("--lang-l1", default="en")
    p.add_argument("--lang-l2", default="de")
    p.add_argument("--dim", type=_positive_int, default=40)
    p.add_argument("--window", type=_positive_int, default=5)
    p.add_argument("--min-count", type=_positive_int, default=2)
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=1.0)
    p.add_argument("--epochs", type=_positive_int, default=5)
    p.add_argument("--learning-rate", type=_positive_float, default=0.025)
    p.add_argument("--negative", type=_nonneg_int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--left-only", action="store_true", help="use a left-only context window")
    p.add_argument("--out-l1", required=True)
    p.add_argument("--out-l2", required=True)
    p.add_argument("--report", help="per-epoch loss TSV")
    p.set_defaults(func=cmd_train_bilingual,
                   _inputs=["corpus_l1", "corpus_l2", "parallel_l1", "parallel_l2"])

    align = sub.add_parser("align", help="fit or apply a Procrustes alignment")
    asub = align.add_subparsers(dest="align_command", metavar="ACTION")
    asub.required = True
    p = asub.add_parser("fit", help="fit a model on the common vocabulary")
    p.add_argument("--source", required=True, help="tweet embeddings")
    p.add_argument("--target", required=True, help="news embeddings")
    p.add_argument("--source-lang", default="und")
    p.add_argument("--target-lang", default="und")
    p.add_argument("--source-counts", help="token<TAB>count file overriding line order")
    p.add_argument("--target-counts")
    p.add_argument("--mode", choices=["t2n", "n2t"], default="t2n")
    p.add_argument("--top-f", type=_positive_int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align_fit,
                   _inputs=["source", "target", "source_counts", "target_counts"])
    p = asub.add_parser("apply", help="transform an embedding file with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--lang", default="und")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align_apply, _inputs=["model", "input"])

    p = sub.add_parser("rbo", help="average RBO of neighbour lists over the common vocabulary")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--model", help="also report RBO after applying this model")
    p.add_argument("--top-f", type=_positive_int, default=5000)
    p.add_argument("--persistence", type=_probability, default=0.9)
    p.add_argument("--depth", type=_positive_int, default=100)
    p.add_argument("--variant", choices=["ext", "min"], default="ext")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_rbo, _inputs=["source", "target", "model"])

    p = sub.add_parser("neighbors", help="nearest neighbours by cosine similarity")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--query", required=True, action="append")
    p.add_argument("--depth", type=_positive_int, default=10)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_neighbors, _inputs=["embeddings"])

    def eval_inputs(p, multi=False):
        p.add_argument("--tweets", required=True, help="tweet corpus (JSON-Lines)")
        p.add_argument("--news", required=True, help="news corpus (JSON-Lines)")
        nargs = "+" if multi else None
        p.add_argument("--tweet-vectors", required=True, type=_vector_spec, nargs=nargs,
                       help="PATH or LANG=PATH[,LANG=PATH...]")
        p.add_argument("--news-vectors", required=True, type=_vector_spec, nargs=nargs)
        p.add_argument("--top-f", type=_positive_int, default=None,
                       help="common tokens used when fitting an alignment")

    p = sub.add_parser("docsim", help="cosine similarity of tweet/news document vectors")
    eval_inputs(p)
    p.add_argument("--model")
    p.add_argument("--mode", choices=["none", "t2n", "n2t"], default=None)
    p.add_argument("--pairs", help="gold-format TSV restricting the pairs scored")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_docsim,
                   _inputs=["tweets", "news", "tweet_vectors", "news_vectors", "model", "pairs"])

    p = sub.add_parser("evaluate", help="Pearson r (and accuracy) against gold judgments")
    p.add_argument("--gold", required=True)
    eval_inputs(p)
    p.add_argument("--model")
    p.add_argument("--mode", choices=["none", "t2n", "n2t"], default=None)
    p.add_argument("--classify", choices=["auto", "yes", "no"], default="auto")
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--pairs-out", help="per-pair TSV of gold and predicted similarity")
    p.set_defaults(func=cmd_evaluate,
                   _inputs=["gold", "tweets", "news", "tweet_vectors", "news_vectors", "model"])

    p = sub.add_parser("sweep", help="evaluate a list of embedding dimensions and modes")
    p.add_argument("--gold", required=True)
    eval_inputs(p, multi=True)
    p.add_argument("--modes", type=_modes, default=["none", "t2n", "n2t"])
    p.add_argument("--classify", choices=["auto", "yes", "no"], default="auto")
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep,
                   _inputs=["gold", "tweets", "news", "tweet_vectors", "news_vectors"])
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    args._command = args.command + (f" {args.align_command}" if args.command == "align" else "")
    inputs = _flatten_inputs(*(getattr(args, name) for name in args._inputs))
    out = Outputs(args, inputs)
    try:
        _check_inputs(inputs)
        args.func(args, out)
        out.commit()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"twe: error: {exc}", file=sys.stderr)
        return 2
    except (TWEError, OSError, ValueError) as exc:
        name = type(exc).__name__
        msg = str(exc)
        if not msg.startswith(name):
            msg = f"{name}: {msg}"
        print(f"twe: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
