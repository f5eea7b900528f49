"""Versioned JSON dumps of fitted estimators.

A dump records the estimator class, its constructor parameters and every
fitted attribute (names ending in ``_``). Floats are written with ``repr``
precision, so loading reproduces the model bit for bit.
"""

import dataclasses
import json

import numpy as np
from sklearn.pipeline import Pipeline

from .classifiers import C45Classifier, KNNClassifier, LinearSVMClassifier, RandomForestClassifier
from .classifiers._tree import Tree
from .exceptions import FormatError
from .indexing import TermWeighter, Vocabulary
from .pca import VariancePCA
from .preprocess import StopList, TextPreprocessor

FORMAT = "textcat-model"
VERSION = 1

_ESTIMATORS = {cls.__name__: cls for cls in (
    C45Classifier, KNNClassifier, LinearSVMClassifier, RandomForestClassifier, VariancePCA,
    TermWeighter, TextPreprocessor)}
_RECORDS = {cls.__name__: cls for cls in (Tree, Vocabulary)}


def _encode(value):
    if isinstance(value, np.ndarray):
        return {"__ndarray__": value.dtype.str, "shape": list(value.shape),
                "data": value.ravel().tolist()}
    if isinstance(value, np.generic):
        return _encode(value.item())
    if isinstance(value, Pipeline):
        return {"__pipeline__": [[name, _encode(step)] for name, step in value.steps]}
    if type(value).__name__ in _ESTIMATORS:
        return {"__estimator__": type(value).__name__,
                "params": {k: _encode(v) for k, v in value.get_params(deep=False).items()},
                "state": {k: _encode(v) for k, v in sorted(vars(value).items())
                          if k.endswith("_") and not k.startswith("_")}}
    if dataclasses.is_dataclass(value) and type(value).__name__ in _RECORDS:
        return {"__record__": type(value).__name__,
                "fields": {f.name: _encode(getattr(value, f.name))
                           for f in dataclasses.fields(value)}}
    if isinstance(value, StopList):
        return {"__stoplist__": sorted(value)}
    if isinstance(value, (frozenset, set)):
        return {"__set__": sorted(value)}
    if isinstance(value, tuple):
        return {"__tuple__": [_encode(v) for v in value]}
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {"__dict__": [[_encode(k), _encode(v)] for k, v in value.items()]}
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _decode(value):
    if isinstance(value, list):
        return [_decode(v) for v in value]
    if not isinstance(value, dict):
        return value
    if "__ndarray__" in value:
        dtype = np.dtype(value["__ndarray__"])
        return np.array(value["data"], dtype=dtype).reshape(value["shape"])
    if "__pipeline__" in value:
        return Pipeline([(name, _decode(step)) for name, step in value["__pipeline__"]])
    if "__estimator__" in value:
        cls = _ESTIMATORS.get(value["__estimator__"])
        if cls is None:
            raise FormatError(f"unknown estimator {value['__estimator__']!r}")
        est = cls(**{k: _decode(v) for k, v in value["params"].items()})
        for k, v in value["state"].items():
            setattr(est, k, _decode(v))
        return est
    if "__record__" in value:
        cls = _RECORDS.get(value["__record__"])
        if cls is None:
            raise FormatError(f"unknown record {value['__record__']!r}")
        return cls(**{k: _decode(v) for k, v in value["fields"].items()})
    if "__stoplist__" in value:
        return StopList(value["__stoplist__"])
    if "__set__" in value:
        return frozenset(value["__set__"])
    if "__tuple__" in value:
        return tuple(_decode(v) for v in value["__tuple__"])
    if "__dict__" in value:
        return {_decode(k): _decode(v) for k, v in value["__dict__"]}
    raise FormatError(f"unrecognised object with keys {sorted(value)}")


def dumps(model, meta=None):
    """Serialise ``model`` (a fitted estimator or Pipeline) to a JSON string."""
    doc = {"format": FORMAT, "version": VERSION, "meta": meta or {}, "model": _encode(model)}
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not a model dump: {exc}", line=exc.lineno) from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise FormatError("not a model dump")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported model dump version {doc.get('version')!r}")
    return _decode(doc["model"])


def dump_model(model, path, meta=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model, meta))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
