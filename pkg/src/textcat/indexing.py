"""Vocabulary construction and document-term weighting (boolean, TF, TF-IDF)."""

import enum
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import LabeledSparseMatrix
from .exceptions import ArityError, DomainError, EmptyCorpusError


class WeightingScheme(str, enum.Enum):
    BOOLEAN = "bool"
    TERM_FREQUENCY = "tf"
    TFIDF = "tfidf"


_LOG = {"e": math.log, "10": math.log10, "2": math.log2}


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Ordered terms with their document frequencies over ``n_docs`` documents."""

    terms: tuple
    df: np.ndarray
    n_docs: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "df", np.asarray(self.df, dtype=np.int64))
        if len(self.index) != len(self.terms):
            raise DomainError("duplicate terms in vocabulary")
        if self.df.shape != (len(self.terms),):
            raise ArityError("df must have one entry per term")

    @cached_property
    def index(self):
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return (isinstance(other, Vocabulary) and self.terms == other.terms
                and self.n_docs == other.n_docs and np.array_equal(self.df, other.df))

    __hash__ = None

    def dump(self):
        """``index<TAB>term<TAB>df`` lines."""
        return "".join(f"{i}\t{t}\t{d}\n" for i, (t, d) in enumerate(zip(self.terms, self.df)))

    @classmethod
    def load(cls, text, n_docs):
        terms, df = [], []
        for expected, line in enumerate(l for l in text.splitlines() if l.strip()):
            i, term, d = line.split("\t")
            if int(i) != expected:
                raise DomainError(f"vocabulary index {i} out of order")
            terms.append(term)
            df.append(int(d))
        return cls(tuple(terms), np.array(df, dtype=np.int64), n_docs)


def build_vocabulary(streams, min_df=1, max_features=None):
    """Terms with document frequency >= ``min_df``, sorted lexicographically.

    ``max_features`` keeps only the most frequent terms by document frequency
    (ties broken lexicographically) before sorting.
    """
    if min_df < 1:
        raise DomainError("min_df must be >= 1")
    streams = list(streams)
    df = Counter()
    for tokens in streams:
        df.update(set(tokens))
    kept = [t for t, d in df.items() if d >= min_df]
    if max_features is not None:
        kept = sorted(kept, key=lambda t: (-df[t], t))[:max_features]
    kept.sort()
    if not kept:
        raise EmptyCorpusError("vocabulary is empty")
    return Vocabulary(tuple(kept), np.array([df[t] for t in kept], dtype=np.int64), len(streams))


def term_frequency(stream, vocab):
    """Raw in-vocabulary occurrence counts, keyed by term index in ascending order."""
    index = vocab.index
    counts = Counter(index[t] for t in stream if t in index)
    return dict(sorted(counts.items()))


def idf(n_docs, df_t, base="e"):
    """``log(n_docs / df_t)``; ``base`` is ``"e"``, ``"10"`` or ``"2"``."""
    if not 1 <= df_t <= n_docs:
        raise DomainError(f"document frequency {df_t} outside [1, {n_docs}]")
    return _LOG[str(base)](n_docs / df_t)


def _weight_rows(streams, vocab, scheme, log_base, normalize):
    scheme = WeightingScheme(scheme)
    idf_values = None
    if scheme is WeightingScheme.TFIDF:
        idf_values = np.array([idf(vocab.n_docs, int(d), log_base) for d in vocab.df])
    indptr, indices, data = [0], [], []
    for tokens in streams:
        tf = term_frequency(tokens, vocab)
        cols = np.fromiter(tf.keys(), dtype=np.int64, count=len(tf))
        vals = np.fromiter(tf.values(), dtype=np.float64, count=len(tf))
        if scheme is WeightingScheme.BOOLEAN:
            vals = np.ones_like(vals)
        elif scheme is WeightingScheme.TFIDF:
            vals = vals * idf_values[cols]
            keep = vals != 0
            cols, vals = cols[keep], vals[keep]
        if normalize and vals.size:
            norm = np.sqrt(np.dot(vals, vals))
            if norm > 0:
                vals = vals / norm
        indices.extend(cols.tolist())
        data.extend(vals.tolist())
        indptr.append(len(indices))
    return sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int32),
                          np.array(indptr, dtype=np.int64)), shape=(len(indptr) - 1, len(vocab)))


def weight_matrix(streams, labels, vocab, scheme=WeightingScheme.TFIDF, class_names=None,
                  log_base="e", normalize=False):
    """Document-term matrix under ``scheme`` with labels attached.

    ``labels`` may be class names (mapped to indices in sorted order unless
    ``class_names`` is given) or integer indices into ``class_names``.
    """
    streams = list(streams)
    labels = list(labels)
    if len(labels) != len(streams):
        raise ArityError(f"{len(streams)} documents but {len(labels)} labels")
    if class_names is None:
        class_names = tuple(sorted({str(l) for l in labels}))
    class_names = tuple(class_names)
    if labels and isinstance(labels[0], str):
        lookup = {c: i for i, c in enumerate(class_names)}
        y = np.array([lookup[l] for l in labels], dtype=np.intp)
    else:
        y = np.asarray(labels, dtype=np.intp)
    X = _weight_rows(streams, vocab, scheme, log_base, normalize)
    return LabeledSparseMatrix(X, y, class_names)


def index_documents(docs, stops=None, scheme=WeightingScheme.TFIDF, min_df=1,
                    max_features=None, log_base="e"):
    """Raw documents to a weighted matrix: preprocess, build vocabulary, weight."""
    from .preprocess import preprocess_document

    docs = list(docs)
    if not docs:
        raise EmptyCorpusError("no documents to index")
    streams = [preprocess_document(d, stops) for d in docs]
    vocab = build_vocabulary(streams, min_df=min_df, max_features=max_features)
    matrix = weight_matrix(streams, [d.label for d in docs], vocab, scheme, log_base=log_base)
    return matrix, vocab


class TermWeighter(BaseEstimator, TransformerMixin):
    """Fit a vocabulary on token lists and emit a sparse weighted matrix.

    Parameters
    ----------
    weighting : {"bool", "tf", "tfidf"}
    min_df : int
        Minimum document frequency for a term to be kept.
    max_features : int or None
        Keep only the ``max_features`` terms with the highest document frequency.
    log_base : {"e", "10", "2"}
        Base of the IDF logarithm.
    normalize : bool
        Scale each row to unit Euclidean length after weighting.
    """

    def __init__(self, weighting="tfidf", min_df=1, max_features=None, log_base="e",
                 normalize=False):
        self.weighting = weighting
        self.min_df = min_df
        self.max_features = max_features
        self.log_base = log_base
        self.normalize = normalize

    def fit(self, X, y=None):
        self.vocabulary_ = build_vocabulary(X, self.min_df, self.max_features)
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        return _weight_rows(X, self.vocabulary_, self.weighting, self.log_base, self.normalize)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(self.vocabulary_.terms, dtype=object)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.string = True
        tags.input_tags.two_d_array = False
        return tags
