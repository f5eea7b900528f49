import io
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from textcat.corpus import (LabeledSparseMatrix, load_cnae9, load_dataset, load_dbworld,
                            load_text_corpus, parse_arff, read_sparse, write_sparse)
from textcat.exceptions import (ArityError, DataWarning, DomainError, EmptyCorpusError,
                                FormatError, ParseError)


def _cnae_line(label, nonzeros):
    row = [0] * 856
    for j, v in nonzeros.items():
        row[j] = v
    return ",".join(map(str, [label] + row))


def test_cnae9_all_zero_row(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text(_cnae_line(3, {}) + "\n")
    m = load_cnae9(path)
    assert (m.n_docs, m.n_features) == (1, 856)
    assert m.labels.tolist() == [2]
    assert m.X.nnz == 0


def test_cnae9_two_rows_hand_enumerated(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text(_cnae_line(1, {0: 2, 855: 1}) + "\n" + _cnae_line(9, {10: 3, 7: 1}) + "\n")
    m = load_cnae9(path)
    rows = [(i.tolist(), w.tolist()) for i, w in m.rows()]
    assert rows == [([0, 855], [2.0, 1.0]), ([7, 10], [1.0, 3.0])]
    assert m.labels.tolist() == [0, 8]
    assert m.class_names == tuple("123456789")


def test_cnae9_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text(_cnae_line(1, {}) + "\n1,2,3\n")
    with pytest.raises(ParseError) as err:
        load_cnae9(bad)
    assert err.value.line == 2
    bad.write_text(_cnae_line(1, {}).replace(",0", ",x", 1) + "\n")
    with pytest.raises(ParseError):
        load_cnae9(bad)
    bad.write_text(_cnae_line(10, {}) + "\n")
    with pytest.raises(DomainError):
        load_cnae9(bad)


def test_cnae9_row_sums_and_determinism(cnae9_file):
    m = load_cnae9(cnae9_file)
    sums = [sum(int(v) for v in line.split(",")[1:])
            for line in open(cnae9_file).read().splitlines()]
    assert np.array_equal(np.asarray(m.X.sum(axis=1)).ravel(), sums)
    assert m == load_cnae9(cnae9_file)


def test_arff_minimal():
    rel = parse_arff(io.StringIO("@relation r\n@attribute x numeric\n@data\n5\n"))
    assert [a.name for a in rel.attributes] == ["x"]
    assert rel.data == [[5.0]]


def test_arff_comments_quotes_case_and_sparse():
    text = """% leading comment
@RELATION 'my rel'
@Attribute 'two words' {0,1}
@attribute b NUMERIC
% between
@attribute class {yes,no}
@DATA
1,2.5,yes
% row comment
{0 1, 2 no}
0,?,no
"""
    rel = parse_arff(io.StringIO(text))
    assert rel.name == "my rel"
    assert rel.attributes[0].name == "two words"
    assert rel.attributes[0].values == ("0", "1")
    assert rel.data[0] == ["1", 2.5, "yes"]
    assert rel.data[1] == ["1", 0.0, "no"]
    assert rel.data[2][1] is None


def test_arff_errors():
    with pytest.raises(FormatError):
        parse_arff(io.StringIO("@relation r\n@attribute x numeric\n"))
    with pytest.raises(ParseError) as err:
        parse_arff(io.StringIO("@relation r\n@attribute x numeric\n@data\n1,2\n"))
    assert err.value.line == 4
    with pytest.raises(ParseError):
        parse_arff(io.StringIO("@relation r\n@attribute x {0,1}\n@data\n2\n"))


DBW = """@relation d
@attribute t0 {0,1}
@attribute t1 {0,1}
@attribute t2 {0,1}
@attribute CLASS {0,1}
@data
1,0,1,1
0,0,0,0
0,1,1,1
"""


def test_dbworld_hand_enumerated(tmp_path):
    path = tmp_path / "d.arff"
    path.write_text(DBW)
    m = load_dbworld(path)
    assert (m.n_docs, m.n_features, m.n_classes) == (3, 3, 2)
    assert m.labels.tolist() == [1, 0, 1]
    assert [i.tolist() for i, _ in m.rows()] == [[0, 2], [], [1, 2]]
    assert set(m.X.data) == {1.0}


def test_dbworld_nonzeros_match_ones(dbworld_file):
    m = load_dbworld(dbworld_file)
    lines = open(dbworld_file).read().split("@data\n")[1].splitlines()
    ones = [line.split(",")[:-1].count("1") for line in lines]
    assert np.diff(m.X.indptr).tolist() == ones
    assert (m.n_docs, m.n_features) == (64, 229)


def test_dbworld_single_class_warns(tmp_path):
    path = tmp_path / "d.arff"
    path.write_text(DBW.replace(",1\n", ",0\n"))
    with pytest.warns(DataWarning):
        m = load_dbworld(path)
    assert m.class_counts().tolist() == [3, 0]


def test_dbworld_rejects_non_binary(tmp_path):
    path = tmp_path / "d.arff"
    path.write_text(DBW.replace("@attribute t0 {0,1}", "@attribute t0 numeric")
                    .replace("1,0,1,1", "2,0,1,1"))
    with pytest.raises(DomainError):
        load_dbworld(path)


def test_text_corpus_order_and_labels(tmp_path):
    for cls in ("b", "a"):
        for name in ("y.txt", "x.txt"):
            (tmp_path / cls).mkdir(exist_ok=True)
            (tmp_path / cls / name).write_text(f"{cls} {name}")
    docs = load_text_corpus(tmp_path)
    assert [d.id for d in docs] == ["a/x.txt", "a/y.txt", "b/x.txt", "b/y.txt"]
    assert [d.label for d in docs] == ["a", "a", "b", "b"]
    assert len({d.id for d in docs}) == 4


def test_text_corpus_empty(tmp_path):
    with pytest.raises(EmptyCorpusError):
        load_text_corpus(tmp_path)
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    (tmp_path / "b" / "d.txt").write_text("hello")
    with pytest.warns(DataWarning):
        docs = load_text_corpus(tmp_path)
    assert len(docs) == 1


def test_three_class_fixture(text_corpus):
    docs = load_dataset("text", text_corpus)
    assert sorted({d.label for d in docs}) == ["finance", "medicine", "space"]


def test_matrix_invariants():
    with pytest.raises(ArityError):
        LabeledSparseMatrix(sp.csr_matrix(np.eye(2)), [0], ("a",))
    with pytest.raises(DomainError):
        LabeledSparseMatrix(sp.csr_matrix(np.eye(2)), [0, 2], ("a", "b"))
    with pytest.raises(DomainError):
        LabeledSparseMatrix(sp.csr_matrix(np.array([[np.inf]])), [0], ("a",))
    # unsorted / duplicate indices are canonicalised
    X = sp.csr_matrix((np.array([1.0, 2.0, 3.0]), np.array([2, 0, 2]), np.array([0, 3])),
                      shape=(1, 3))
    m = LabeledSparseMatrix(X, [0], ("a",))
    idx, w = next(m.rows())
    assert idx.tolist() == [0, 2] and w.tolist() == [2.0, 4.0]


weights = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_sparse_format_round_trip(tmp_path_factory, data):
    n = data.draw(st.integers(1, 6))
    f = data.draw(st.integers(1, 8))
    dense = np.array(data.draw(st.lists(st.lists(weights, min_size=f, max_size=f),
                                        min_size=n, max_size=n)))
    mask = np.array(data.draw(st.lists(st.lists(st.booleans(), min_size=f, max_size=f),
                                       min_size=n, max_size=n)))
    dense = np.where(mask, dense, 0.0)
    labels = data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    m = LabeledSparseMatrix(sp.csr_matrix(dense), labels, ("alpha", "beta", "gamma"))
    path = tmp_path_factory.mktemp("rt") / "m.txt"
    write_sparse(m, path)
    assert read_sparse(path) == m


def test_sparse_format_is_diffable(tmp_path):
    m = LabeledSparseMatrix(sp.csr_matrix(np.array([[0, 1.5], [2, 0]])), [1, 0], ("n", "p"))
    write_sparse(m, tmp_path / "m.txt")
    body = [l for l in (tmp_path / "m.txt").read_text().splitlines() if not l.startswith("#")]
    assert body == ["p 1:1.5", "n 0:2"]


def test_read_sparse_errors(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text('# textcat-sparse 1\n# n_features 2\n# classes ["a"]\na 1:1 0:2\n')
    with pytest.raises(ParseError):
        read_sparse(path)
    path.write_text('# textcat-sparse 1\n# n_features 2\n# classes ["a"]\nb 0:1\n')
    with pytest.raises(ParseError):
        read_sparse(path)


def test_load_dataset_unknown_kind(tmp_path):
    with pytest.raises(DomainError):
        load_dataset("csv", tmp_path)


def test_loaders_no_warnings_on_clean_input(cnae9_file):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_dataset("cnae9", cnae9_file)
