"""Exception and warning types raised across the package."""

from sklearn.exceptions import NotFittedError  # noqa: F401  (re-exported)


class TextcatError(Exception):
    """Base class for all package errors."""


class ParseError(TextcatError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


class FormatError(ParseError):
    """Structurally invalid file (e.g. ARFF without an @data section)."""


class DomainError(TextcatError, ValueError):
    """Input outside an operation's domain."""


class DegenerateVarianceError(DomainError):
    """All features are constant, so there is nothing to decompose."""


class ArityError(TextcatError, ValueError):
    """Mismatched lengths or dimensions."""


class EmptyCorpusError(TextcatError, ValueError):
    """No documents, or no terms survived vocabulary construction."""


class DataWarning(UserWarning):
    """Suspicious but loadable data (empty class folder, single observed class)."""


class UndefinedMetricWarning(UserWarning):
    """A per-class metric has a zero denominator."""
