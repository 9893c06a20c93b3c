import numpy as np
import pytest

from twe.embeddings import Collection, EmbeddingSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_set(tokens, rows, language="en", collection=Collection.TWEET):
    return EmbeddingSet(tuple(tokens), np.asarray(rows, dtype=float), language, collection)


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
