from pathlib import Path

import numpy as np
import pytest

from infoclus import Dataset, Embedding, annotate_stats, load_dendrogram

FIXTURES = Path(__file__).parent / "fixtures"
TOY_CSV = FIXTURES / "toy_points.csv"
TOY_TREE = FIXTURES / "toy_tree.csv"

# p0..p3 form one arm of an "L", p4..p7 the other
TOY = np.array([(4, 1), (5, 2), (6, 1), (7, 2), (1, 4), (2, 5), (1, 6), (2, 7)], dtype=float)


@pytest.fixture
def toy_dataset():
    return Dataset.from_numeric(TOY, names=["a1", "a2"])


@pytest.fixture
def toy_embedding():
    return Embedding(TOY.copy())


@pytest.fixture
def toy_tree(toy_dataset):
    return annotate_stats(load_dendrogram(TOY_TREE, 8), toy_dataset)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
