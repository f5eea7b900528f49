"""Dataset loaders and the labeled sparse matrix shared by the whole pipeline.

Three sources are supported:

* CNAE-9: UCI comma-separated file, class label (1-9) first, then 856 counts.
* DBWorld: ARFF with binary term attributes and a final class attribute.
* Raw text: a directory with one sub-directory per class, one file per document.

Pre-vectorized matrices can also be saved and re-read in a line-oriented sparse
text format (``label idx:weight idx:weight ...``).
"""

import io
import json
import math
import os
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import (ArityError, DataWarning, DomainError, EmptyCorpusError,
                         FormatError, ParseError)

CNAE9_FEATURES = 856
CNAE9_CLASSES = 9

SPARSE_MAGIC = "# textcat-sparse 1"


@dataclass(frozen=True)
class RawDocument:
    id: str
    text: str
    label: str


@dataclass(frozen=True, eq=False)
class LabeledSparseMatrix:
    """Document-term weight matrix with one class label per row.

    ``X`` is a CSR matrix with sorted, duplicate-free column indices and
    ``labels`` holds dense 0-based indices into ``class_names``.
    """

    X: sp.csr_matrix
    labels: np.ndarray
    class_names: tuple

    def __post_init__(self):
        X = sp.csr_matrix(self.X, dtype=np.float64)
        X.sum_duplicates()
        X.sort_indices()
        labels = np.asarray(self.labels, dtype=np.intp).ravel()
        names = tuple(str(c) for c in self.class_names)
        if labels.shape[0] != X.shape[0]:
            raise ArityError(f"{X.shape[0]} rows but {labels.shape[0]} labels")
        if labels.size and (labels.min() < 0 or labels.max() >= len(names)):
            raise DomainError("label index outside class_names")
        if not np.all(np.isfinite(X.data)):
            raise DomainError("non-finite weight in matrix")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", names)

    @property
    def n_docs(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def rows(self):
        """Yield ``(indices, weights)`` per document."""
        X = self.X
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            yield X.indices[lo:hi], X.data[lo:hi]

    def toarray(self):
        return self.X.toarray()

    def subset(self, index):
        index = np.asarray(index)
        return LabeledSparseMatrix(self.X[index], self.labels[index], self.class_names)

    def with_features(self, X):
        """Same labels, new feature matrix (dense or sparse)."""
        return LabeledSparseMatrix(sp.csr_matrix(X), self.labels, self.class_names)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    def __eq__(self, other):
        if not isinstance(other, LabeledSparseMatrix):
            return NotImplemented
        a, b = self.X, other.X
        return (a.shape == b.shape
                and self.class_names == other.class_names
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(a.indptr, b.indptr)
                and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.data, b.data))

    __hash__ = None


# --------------------------------------------------------------------------
# CNAE-9


def load_cnae9(path):
    """Load the UCI CNAE-9 file.

    Each line holds the class label (1-9) followed by 856 integer term
    frequencies. Zero frequencies are left out of the sparse rows.
    """
    indptr = [0]
    indices = []
    data = []
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != CNAE9_FEATURES + 1:
                raise ParseError(f"expected {CNAE9_FEATURES + 1} fields, got {len(fields)}",
                                 line=lineno, source=path)
            try:
                values = [int(v) for v in fields]
            except ValueError as exc:
                raise ParseError(f"non-integer field ({exc})", line=lineno, source=path) from None
            label = values[0]
            if not 1 <= label <= CNAE9_CLASSES:
                raise DomainError(f"{path}:{lineno}: class label {label} outside 1-{CNAE9_CLASSES}")
            labels.append(label - 1)
            for j, v in enumerate(values[1:]):
                if v:
                    indices.append(j)
                    data.append(float(v))
            indptr.append(len(indices))
    X = sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int32),
                       np.array(indptr, dtype=np.int64)),
                      shape=(len(labels), CNAE9_FEATURES))
    names = tuple(str(c) for c in range(1, CNAE9_CLASSES + 1))
    return LabeledSparseMatrix(X, np.array(labels, dtype=np.intp), names)


# --------------------------------------------------------------------------
# ARFF


@dataclass(frozen=True)
class ArffAttribute:
    name: str
    kind: str  # "numeric" | "nominal" | "string"
    values: tuple = ()


@dataclass
class ArffRelation:
    name: str
    attributes: list = field(default_factory=list)
    data: list = field(default_factory=list)


_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _split_arff_values(text, lineno, source):
    """Split a comma-separated ARFF value list honouring '...' and "..." quoting."""
    out = []
    i, n = 0, len(text)
    while i <= n:
        while i < n and text[i] in " \t":
            i += 1
        if i < n and text[i] in "'\"":
            quote = text[i]
            i += 1
            buf = []
            while i < n and text[i] != quote:
                if text[i] == "\\" and i + 1 < n:
                    i += 1
                buf.append(text[i])
                i += 1
            if i >= n:
                raise ParseError("unterminated quoted value", line=lineno, source=source)
            i += 1
            out.append("".join(buf))
            while i < n and text[i] in " \t":
                i += 1
        else:
            j = text.find(",", i)
            j = n if j < 0 else j
            out.append(text[i:j].strip())
            i = j
        if i < n and text[i] != ",":
            raise ParseError(f"unexpected character {text[i]!r}", line=lineno, source=source)
        i += 1
    return out


def _read_name(rest, lineno, source):
    rest = rest.strip()
    if rest[:1] in ("'", '"'):
        quote = rest[0]
        end = rest.find(quote, 1)
        if end < 0:
            raise ParseError("unterminated quoted name", line=lineno, source=source)
        return rest[1:end], rest[end + 1:].strip()
    m = re.match(r"(\S+)\s*(.*)$", rest)
    if not m:
        raise ParseError("missing name", line=lineno, source=source)
    return m.group(1), m.group(2).strip()


def _convert(value, attr, lineno, source):
    if value == "?":
        return None
    if attr.kind == "numeric":
        try:
            return float(value)
        except ValueError:
            raise ParseError(f"non-numeric value {value!r} for {attr.name}",
                             line=lineno, source=source) from None
    if attr.kind == "nominal" and value not in attr.values:
        raise ParseError(f"value {value!r} not declared for {attr.name}",
                         line=lineno, source=source)
    return value


def parse_arff(stream, source=None):
    """Parse ARFF text into an :class:`ArffRelation`.

    Keywords are case-insensitive, ``%`` starts a comment line and names may be
    quoted. Both dense rows and sparse ``{index value, ...}`` rows are read.
    Errors carry the 1-based line number.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    relation = None
    attributes = []
    rows = []
    in_data = False
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            keyword, _, rest = line.partition(" ")
            if "\t" in keyword:
                keyword, _, tail = keyword.partition("\t")
                rest = tail + " " + rest
            keyword = keyword.lower()
            if keyword == "@relation":
                relation, _ = _read_name(rest, lineno, source)
            elif keyword == "@attribute":
                name, spec = _read_name(rest, lineno, source)
                if spec.startswith("{"):
                    if not spec.endswith("}"):
                        raise ParseError("unterminated nominal value list", line=lineno, source=source)
                    values = tuple(_split_arff_values(spec[1:-1], lineno, source))
                    attributes.append(ArffAttribute(name, "nominal", values))
                elif spec.lower() in _NUMERIC_TYPES:
                    attributes.append(ArffAttribute(name, "numeric"))
                elif spec.lower() == "string":
                    attributes.append(ArffAttribute(name, "string"))
                else:
                    raise ParseError(f"unsupported attribute type {spec!r}", line=lineno, source=source)
            elif keyword == "@data":
                if relation is None:
                    raise FormatError("@data before @relation", line=lineno, source=source)
                in_data = True
            else:
                raise ParseError(f"unexpected header line {line[:40]!r}", line=lineno, source=source)
            continue
        if line.startswith("{"):
            if not line.endswith("}"):
                raise ParseError("unterminated sparse row", line=lineno, source=source)
            row = [0.0 if a.kind == "numeric" else (a.values[0] if a.values else "")
                   for a in attributes]
            body = line[1:-1].strip()
            for item in (_split_arff_values(body, lineno, source) if body else []):
                idx, _, value = item.strip().partition(" ")
                try:
                    idx = int(idx)
                except ValueError:
                    raise ParseError(f"bad sparse index {idx!r}", line=lineno, source=source) from None
                if not 0 <= idx < len(attributes):
                    raise ParseError(f"sparse index {idx} out of range", line=lineno, source=source)
                value = value.strip()
                if value[:1] in ("'", '"'):
                    value = value[1:-1]
                row[idx] = _convert(value, attributes[idx], lineno, source)
        else:
            values = _split_arff_values(line, lineno, source)
            if len(values) != len(attributes):
                raise ParseError(f"row has {len(values)} values, expected {len(attributes)}",
                                 line=lineno, source=source)
            row = [_convert(v, a, lineno, source) for v, a in zip(values, attributes)]
        rows.append(row)
    if not in_data:
        raise FormatError("missing @data section", source=source)
    return ArffRelation(relation, attributes, rows)


def load_dbworld(path):
    """Load a DBWorld e-mails ARFF file (binary terms, class attribute last).

    Works for both the "subjects" and the "bodies" distributions; which one is
    loaded is decided by ``path``.
    """
    with open(path, encoding="utf-8") as fh:
        rel = parse_arff(fh, source=str(path))
    return relation_to_matrix(rel, binary=True, source=str(path))


def relation_to_matrix(rel, binary=False, source=None):
    """Convert an ARFF relation whose last attribute is the class."""
    if len(rel.attributes) < 2:
        raise DomainError("relation needs at least one feature and a class attribute")
    *features, cls = rel.attributes
    n_features = len(features)
    if cls.kind == "nominal":
        class_names = cls.values
    else:
        seen = sorted({str(r[-1]) for r in rel.data if r[-1] is not None})
        class_names = tuple(seen)
    lookup = {c: i for i, c in enumerate(class_names)}
    indices, data, indptr, labels = [], [], [0], []
    for rowno, row in enumerate(rel.data, 1):
        label = row[-1]
        if label is None:
            raise DomainError(f"{source or 'relation'}: data row {rowno} has a missing class")
        labels.append(lookup[str(label) if cls.kind != "nominal" else label])
        for j, v in enumerate(row[:-1]):
            if isinstance(v, str):
                try:
                    v = float(v)
                except ValueError:
                    raise DomainError(f"data row {rowno}: non-numeric term value {v!r}") from None
            if v is None:
                raise DomainError(f"data row {rowno}: missing term value for {features[j].name}")
            if binary and v not in (0.0, 1.0):
                raise DomainError(f"data row {rowno}: non-binary term value {v!r} for {features[j].name}")
            if v:
                indices.append(j)
                data.append(float(v))
        indptr.append(len(indices))
    observed = len(set(labels))
    if observed < 2:
        warnings.warn(f"{source or 'relation'}: only {observed} class observed", DataWarning,
                      stacklevel=2)
    X = sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int32),
                       np.array(indptr, dtype=np.int64)), shape=(len(labels), n_features))
    return LabeledSparseMatrix(X, np.array(labels, dtype=np.intp), class_names)


# --------------------------------------------------------------------------
# raw text


def load_text_corpus(root):
    """Read a directory-per-class corpus into :class:`RawDocument` objects.

    Documents are returned in lexicographic path order; the id is the path
    relative to ``root`` and the label is the class folder name.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyCorpusError(f"{root}: not a directory")
    docs = []
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    for class_dir in class_dirs:
        files = sorted(p for p in class_dir.rglob("*") if p.is_file())
        if not files:
            warnings.warn(f"{class_dir}: empty class folder", DataWarning, stacklevel=2)
        for path in files:
            try:
                raw = path.read_bytes()
            except OSError as exc:
                raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
            text = raw.decode("utf-8", errors="replace")
            docs.append(RawDocument(path.relative_to(root).as_posix(), text, class_dir.name))
    if not docs:
        raise EmptyCorpusError(f"{root}: corpus contains no documents")
    return docs


# --------------------------------------------------------------------------
# canonical sparse format


def _format_weight(w):
    return repr(float(w)) if not float(w).is_integer() or abs(w) >= 1e16 else str(int(w))


def write_sparse(matrix, path):
    """Write ``matrix`` as ``label idx:weight ...`` lines (UTF-8).

    A two-line header records the feature count and the ordered class names so
    the file reloads to an identical matrix. Labels are written as class names
    and must not contain whitespace.
    """
    for name in matrix.class_names:
        if not name or any(ch.isspace() for ch in name):
            raise DomainError(f"class name {name!r} cannot be written to the sparse format")
    lines = [SPARSE_MAGIC,
             f"# n_features {matrix.n_features}",
             f"# classes {json.dumps(list(matrix.class_names), ensure_ascii=False)}"]
    for label, (idx, vals) in zip(matrix.labels, matrix.rows()):
        parts = [matrix.class_names[label]]
        parts.extend(f"{i}:{_format_weight(v)}" for i, v in zip(idx, vals))
        lines.append(" ".join(parts))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def read_sparse(path):
    """Inverse of :func:`write_sparse`."""
    if hasattr(path, "read"):
        lines = path.read().splitlines()
        source = None
    else:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        source = str(path)
    n_features = None
    class_names = None
    indices, data, indptr, labels = [], [], [0], []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith("# n_features "):
                n_features = int(line.split()[2])
            elif line.startswith("# classes "):
                class_names = tuple(json.loads(line[len("# classes "):]))
            continue
        if class_names is None:
            raise FormatError("missing '# classes' header", line=lineno, source=source)
        label, *items = line.split()
        try:
            labels.append(class_names.index(label))
        except ValueError:
            raise ParseError(f"unknown class {label!r}", line=lineno, source=source) from None
        prev = -1
        for item in items:
            i, sep, w = item.partition(":")
            try:
                i, w = int(i), float(w)
            except ValueError:
                raise ParseError(f"bad entry {item!r}", line=lineno, source=source) from None
            if not sep or i <= prev:
                raise ParseError(f"indices must be strictly increasing ({item!r})",
                                 line=lineno, source=source)
            if not math.isfinite(w):
                raise DomainError(f"line {lineno}: non-finite weight")
            prev = i
            indices.append(i)
            data.append(w)
        indptr.append(len(indices))
    if n_features is None:
        n_features = (max(indices) + 1) if indices else 0
    if indices and max(indices) >= n_features:
        raise DomainError("feature index beyond declared n_features")
    X = sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int32),
                       np.array(indptr, dtype=np.int64)), shape=(len(labels), n_features))
    return LabeledSparseMatrix(X, np.array(labels, dtype=np.intp), class_names)


def load_dataset(kind, path):
    """Dispatch on dataset kind: ``cnae9``, ``dbworld``, ``arff``, ``sparse`` or ``text``.

    ``text`` returns a list of :class:`RawDocument`; the others return a
    :class:`LabeledSparseMatrix`.
    """
    path = os.fspath(path)
    if kind == "cnae9":
        return load_cnae9(path)
    if kind == "dbworld":
        return load_dbworld(path)
    if kind == "arff":
        with open(path, encoding="utf-8") as fh:
            return relation_to_matrix(parse_arff(fh, source=path), source=path)
    if kind == "sparse":
        return read_sparse(path)
    if kind == "text":
        return load_text_corpus(path)
    raise DomainError(f"unknown dataset kind {kind!r}")
