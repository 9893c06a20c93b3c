import json
import shutil

import numpy as np
import pytest

from twe.alignment import load_model
from twe.cli import run
from twe.embeddings import load_embeddings
from twe.synthetic import MINI_DIR, renamed_copy, toy_topic_corpus


@pytest.fixture
def mini(tmp_path):
    d = tmp_path / "mini"
    shutil.copytree(MINI_DIR, d)
    return d


def _eval_args(d, *extra):
    return [
        "evaluate",
        "--gold", str(d / "gold.tsv"),
        "--tweets", str(d / "tweets.jsonl"),
        "--news", str(d / "news.jsonl"),
        "--tweet-vectors", str(d / "tweets.vec"),
        "--news-vectors", str(d / "news.vec"),
        *extra,
    ]


def test_align_fit_writes_model_and_metadata(mini, tmp_path):
    out = tmp_path / "model.json"
    code = run(["align", "fit", "--source", str(mini / "tweets.vec"), "--target", str(mini / "news.vec"),
                "--out", str(out)])
    assert code == 0
    model = load_model(out)
    assert model.direction.value == "T2N"
    assert model.residual <= 1e-6
    meta = json.loads((tmp_path / "model.json.meta.json").read_text())
    assert meta["command"] == "align fit"
    assert set(meta["inputs"]) == {str(mini / "tweets.vec"), str(mini / "news.vec")}
    assert meta["parameters"]["mode"] == "t2n"


def test_align_apply(mini, tmp_path):
    model = tmp_path / "m.json"
    assert run(["align", "fit", "--source", str(mini / "tweets.vec"), "--target", str(mini / "news.vec"),
                "--out", str(model)]) == 0
    assert run(["align", "apply", "--model", str(model), "--input", str(mini / "tweets.vec"),
                "--out", str(tmp_path / "moved.vec")]) == 0
    moved = load_embeddings(tmp_path / "moved.vec")
    news = load_embeddings(mini / "news.vec")
    assert np.abs(moved.matrix - news.subset(moved.tokens).matrix).max() < 1e-6


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["rbo", "--source", "a.vec"],
        ["rbo", "--source", "a", "--target", "b", "--persistence", "1.5"],
        ["rbo", "--source", "a", "--target", "b", "--depth", "0"],
        ["train-bilingual", "--corpus-l1", "a", "--corpus-l2", "b", "--parallel-l1", "c",
         "--parallel-l2", "d", "--out-l1", "x", "--out-l2", "y", "--lambda", "-1"],
        ["align", "fit", "--source", "a", "--target", "b", "--out", "c", "--mode", "sideways"],
    ],
)
def test_usage_errors(argv):
    assert run(argv) == 2


def test_rbo_disjoint_vocabularies(write, tmp_path, capsys):
    a = write("a.vec", "a 1 0\nb 0 1\n")
    b = write("b.vec", "c 1 0\nd 0 1\n")
    out = tmp_path / "rbo.tsv"
    assert run(["rbo", "--source", str(a), "--target", str(b), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "NoOverlap" in err and len(err.strip().splitlines()) == 1
    assert not out.exists()
    assert sorted(tmp_path.iterdir()) == sorted([a, b])


def test_missing_input_file(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert run(["align", "fit", "--source", str(tmp_path / "nope.vec"), "--target", str(tmp_path / "x"),
                "--out", str(out)]) == 1
    assert "not found" in capsys.readouterr().err
    assert not out.exists()


def test_rbo_report_with_model(mini, tmp_path):
    model = tmp_path / "m.json"
    run(["align", "fit", "--source", str(mini / "tweets.vec"), "--target", str(mini / "news.vec"),
         "--out", str(model)])
    out = tmp_path / "rbo.tsv"
    assert run(["rbo", "--source", str(mini / "tweets.vec"), "--target", str(mini / "news.vec"),
                "--model", str(model), "--depth", "10", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "token\trbo_before\trbo_after"
    assert len(lines) == 62
    summary = dict(kv.split("=") for kv in lines[-1].lstrip("# ").split("\t"))
    assert float(summary["mean_rbo_after"]) > float(summary["mean_rbo_before"])


def test_neighbors_stdout(write, capsys):
    vec = write("n.vec", "a 1 0\nb 0.9 0.1\nc 0 1\n")
    assert run(["neighbors", "--embeddings", str(vec), "--query", "a", "--depth", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "query\trank\ttoken\tcosine"
    assert out[1].startswith("a\t1\tb\t")


def test_neighbors_oov_is_operational_error(write, capsys):
    vec = write("n.vec", "a 1 0\nb 0.9 0.1\n")
    assert run(["neighbors", "--embeddings", str(vec), "--query", "zzz"]) == 1
    assert "OOVQuery" in capsys.readouterr().err


def test_preprocess_command(write, tmp_path):
    src = write("c.jsonl", '{"id": "1", "text": "Hi #there http://x.y", "lang": "en", "kind": "tweet"}\n'
                           '{"id": "2", "text": "RT @a: z", "lang": "en", "kind": "tweet"}\n')
    out = tmp_path / "tok.tsv"
    assert run(["preprocess", "--input", str(src), "--out", str(out)]) == 0
    assert out.read_text() == "1\thi there\n"
    meta = json.loads((tmp_path / "tok.tsv.meta.json").read_text())
    assert meta["dropped"] == 1 and meta["choices"]["lowercase"] is True


def test_evaluate_t2n_and_determinism(mini, tmp_path):
    r1, r2 = tmp_path / "r1.txt", tmp_path / "r2.txt"
    p1, p2 = tmp_path / "p1.tsv", tmp_path / "p2.tsv"
    assert run(_eval_args(mini, "--mode", "t2n", "--out", str(r1), "--pairs-out", str(p1))) == 0
    assert run(_eval_args(mini, "--mode", "t2n", "--out", str(r2), "--pairs-out", str(p2))) == 0
    assert r1.read_bytes() == r2.read_bytes()
    assert p1.read_bytes() == p2.read_bytes()
    report = dict(line.split("=", 1) for line in r1.read_text().splitlines())
    assert report["mode"] == "T2N"
    assert float(report["pearson_r"]) >= 0.9


def test_evaluate_mode_conflicts_with_model(mini, tmp_path):
    model = tmp_path / "m.json"
    run(["align", "fit", "--source", str(mini / "tweets.vec"), "--target", str(mini / "news.vec"),
         "--mode", "n2t", "--out", str(model)])
    assert run(_eval_args(mini, "--model", str(model), "--mode", "t2n")) == 2
    assert run(_eval_args(mini, "--model", str(model), "--out", str(tmp_path / "r.txt"))) == 0
    assert "mode=N2T" in (tmp_path / "r.txt").read_text()


def test_evaluate_unresolved_id(mini, tmp_path, capsys):
    with open(mini / "gold.tsv", "a") as fh:
        fh.write("t99\tn0\ten\ten\t1.0\n")
    out = tmp_path / "r.txt"
    assert run(_eval_args(mini, "--out", str(out))) == 1
    assert "UnresolvedId" in capsys.readouterr().err
    assert not out.exists()


def test_docsim(mini, tmp_path):
    out = tmp_path / "sim.tsv"
    assert run(["docsim", "--tweets", str(mini / "tweets.jsonl"), "--news", str(mini / "news.jsonl"),
                "--tweet-vectors", str(mini / "tweets.vec"), "--news-vectors", str(mini / "news.vec"),
                "--mode", "t2n", "--pairs", str(mini / "gold.tsv"), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "tweet_id\tnews_id\tcosine" and len(rows) == 21


def test_sweep(mini, tmp_path):
    out = tmp_path / "sweep.tsv"
    argv = ["sweep", "--gold", str(mini / "gold.tsv"), "--tweets", str(mini / "tweets.jsonl"),
            "--news", str(mini / "news.jsonl"),
            "--tweet-vectors", str(mini / "tweets.vec"), str(mini / "tweets.vec"),
            "--news-vectors", str(mini / "news.vec"), str(mini / "news.vec"),
            "--out", str(out)]
    assert run(argv) == 0
    rows = [r.split("\t") for r in out.read_text().splitlines()]
    assert rows[0] == ["dim", "mode", "pearson_r", "n_pairs", "n_skipped", "accuracy"]
    assert [r[1] for r in rows[1:]] == ["none", "t2n", "n2t"] * 2
    t2n = [float(r[2]) for r in rows[1:] if r[1] == "t2n"]
    assert min(t2n) >= 0.9


def test_sweep_length_mismatch(mini):
    argv = ["sweep", "--gold", str(mini / "gold.tsv"), "--tweets", str(mini / "tweets.jsonl"),
            "--news", str(mini / "news.jsonl"),
            "--tweet-vectors", str(mini / "tweets.vec"), str(mini / "tweets.vec"),
            "--news-vectors", str(mini / "news.vec")]
    assert run(argv) == 2


def test_train_bilingual_command(tmp_path):
    s1 = toy_topic_corpus(120, seed=1)
    s2 = renamed_copy(s1)
    for name, sents, lang in (("en", s1, "en"), ("de", s2, "de")):
        with open(tmp_path / f"{name}.jsonl", "w") as fh:
            for i, s in enumerate(sents):
                fh.write(json.dumps({"id": f"{name}{i}", "text": " ".join(s), "lang": lang, "kind": "news"}) + "\n")
        (tmp_path / f"par.{name}").write_text("\n".join(" ".join(s) for s in sents) + "\n")
    argv = ["train-bilingual", "--corpus-l1", str(tmp_path / "en.jsonl"), "--corpus-l2", str(tmp_path / "de.jsonl"),
            "--parallel-l1", str(tmp_path / "par.en"), "--parallel-l2", str(tmp_path / "par.de"),
            "--dim", "8", "--epochs", "2", "--seed", "4",
            "--out-l1", str(tmp_path / "en.vec"), "--out-l2", str(tmp_path / "de.vec"),
            "--report", str(tmp_path / "loss.tsv")]
    assert run(argv) == 0
    first = (tmp_path / "en.vec").read_bytes()
    assert load_embeddings(tmp_path / "de.vec").dim == 8
    assert len((tmp_path / "loss.tsv").read_text().splitlines()) == 3
    meta = json.loads((tmp_path / "en.vec.meta.json").read_text())
    assert meta["seed"] == 4 and meta["train_report"]["window_mode"] == "symmetric"
    assert run(argv) == 0
    assert (tmp_path / "en.vec").read_bytes() == first


def test_failed_train_leaves_no_outputs(tmp_path):
    (tmp_path / "en.jsonl").write_text('{"id": "1", "text": "solo", "lang": "en", "kind": "news"}\n')
    (tmp_path / "p").write_text("a b\n")
    before = set(tmp_path.iterdir())
    argv = ["train-bilingual", "--corpus-l1", str(tmp_path / "en.jsonl"), "--corpus-l2", str(tmp_path / "en.jsonl"),
            "--parallel-l1", str(tmp_path / "p"), "--parallel-l2", str(tmp_path / "p"),
            "--out-l1", str(tmp_path / "x.vec"), "--out-l2", str(tmp_path / "y.vec")]
    assert run(argv) == 1
    assert set(tmp_path.iterdir()) == before
