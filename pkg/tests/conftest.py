import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def text_corpus(tmp_path_factory):
    return synth.text_corpus(tmp_path_factory.mktemp("corpus") / "three_class", seed=7)


@pytest.fixture(scope="session")
def cnae9_file(tmp_path_factory):
    return synth.cnae9_like(tmp_path_factory.mktemp("cnae") / "cnae9.csv", seed=3,
                            per_class=12)


@pytest.fixture(scope="session")
def dbworld_file(tmp_path_factory):
    return synth.dbworld_like(tmp_path_factory.mktemp("dbw") / "dbworld.arff", seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def blobs(n_per_class=15, n_classes=3, n_features=4, spread=0.6, seed=0):
    """Well separated Gaussian clusters, distinct rows."""
    r = np.random.default_rng(seed)
    centers = r.normal(scale=4.0, size=(n_classes, n_features))
    X = np.vstack([c + spread * r.normal(size=(n_per_class, n_features)) for c in centers])
    y = np.repeat(np.arange(n_classes), n_per_class)
    return X, y
