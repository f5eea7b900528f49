"""Tokenization, stop-word removal and stemming of raw documents."""

from importlib import resources
from itertools import groupby
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from .porter import porter_stem

__all__ = ["StopList", "tokenize", "remove_stop_words", "porter_stem",
           "preprocess_document", "preprocess_text", "TextPreprocessor"]


class StopList(frozenset):
    """Immutable set of lowercase stop words."""

    def __new__(cls, words=()):
        return super().__new__(cls, (w.strip().lower() for w in words if w.strip()))

    @classmethod
    def from_lines(cls, lines):
        """One word per line; ``#`` starts a comment."""
        words = []
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(line)
        return cls(words)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def smart(cls):
        """The SMART English stop list (571 lines, 570 distinct words)."""
        text = resources.files("textcat").joinpath("data/smart_stoplist.txt").read_text("utf-8")
        return cls.from_lines(text.splitlines())


_DEFAULT_STOPS = None


def default_stop_list():
    global _DEFAULT_STOPS
    if _DEFAULT_STOPS is None:
        _DEFAULT_STOPS = StopList.smart()
    return _DEFAULT_STOPS


def resolve_stop_list(stop_words):
    """Accept ``"smart"``, ``None`` (no stop words), a path, or an iterable of words."""
    if stop_words is None:
        return StopList()
    if isinstance(stop_words, StopList):
        return stop_words
    if isinstance(stop_words, str):
        if stop_words == "smart":
            return default_stop_list()
        return StopList.from_file(stop_words)
    if isinstance(stop_words, Path):
        return StopList.from_file(stop_words)
    return StopList(stop_words)


def tokenize(text):
    """Lowercased maximal runs of alphabetic characters, in order.

    >>> tokenize("The cat, the hat!")
    ['the', 'cat', 'the', 'hat']
    """
    return ["".join(run) for is_alpha, run in groupby(text.lower(), key=str.isalpha) if is_alpha]


def remove_stop_words(tokens, stops):
    return [t for t in tokens if t not in stops]


def preprocess_text(text, stops=None):
    stops = default_stop_list() if stops is None else stops
    return [porter_stem(t) for t in remove_stop_words(tokenize(text), stops)]


def preprocess_document(doc, stops=None):
    """Tokenize, drop stop words, then stem each surviving token.

    ``doc`` is a :class:`~textcat.corpus.RawDocument` or plain string.
    """
    return preprocess_text(getattr(doc, "text", doc), stops)


class TextPreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping raw strings to stemmed token lists.

    Parameters
    ----------
    stop_words : "smart", None, path or iterable of str
        Stop list to remove before stemming.
    stem : bool
        Apply the Porter stemmer to surviving tokens.
    """

    def __init__(self, stop_words="smart", stem=True):
        self.stop_words = stop_words
        self.stem = stem

    def fit(self, X, y=None):
        self.stop_list_ = resolve_stop_list(self.stop_words)
        return self

    def transform(self, X):
        stops = getattr(self, "stop_list_", None)
        if stops is None:
            stops = resolve_stop_list(self.stop_words)
        out = []
        for doc in X:
            tokens = remove_stop_words(tokenize(getattr(doc, "text", doc)), stops)
            out.append([porter_stem(t) for t in tokens] if self.stem else tokens)
        return out

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.string = True
        tags.input_tags.two_d_array = False
        tags.requires_fit = False
        return tags
