import numpy as np
import pytest

from augbench.corpus import Corpus, Document, Label


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_corpus(n_pos, n_neg, name="fixture"):
    docs = [Document(f"p{i}", f"kasar benci {i} wanita tok{i}", Label.POSITIVE) for i in range(n_pos)]
    docs += [Document(f"n{i}", f"biasa saja {i} hari ini w{i}", Label.NEGATIVE) for i in range(n_neg)]
    return Corpus(tuple(docs), name)


@pytest.fixture
def small_corpus():
    return make_corpus(12, 24)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
