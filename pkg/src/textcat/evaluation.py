"""Stratified k-fold cross-validation and confusion-matrix metrics.

Metric functions return percentages. A per-class metric whose denominator is
zero is undefined: it comes back as NaN with an :class:`UndefinedMetricWarning`
and is left out of weighted averages.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from .classifiers import TrainConfig, make_classifier
from .corpus import LabeledSparseMatrix
from .exceptions import ArityError, DomainError, TextcatError, UndefinedMetricWarning
from .pca import VariancePCA

# --------------------------------------------------------------------------
# folds


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """One fold index per document."""

    folds: np.ndarray
    k: int
    seed: int

    def splits(self):
        """Yield ``(train_index, test_index)`` for each fold in order."""
        for f in range(self.k):
            yield np.flatnonzero(self.folds != f), np.flatnonzero(self.folds == f)

    def sizes(self):
        return np.bincount(self.folds, minlength=self.k)


def stratified_kfold(labels, k=10, seed=1):
    """Assign documents to ``k`` folds preserving class proportions.

    Members of each class are shuffled (seeded), then all classes are laid
    end to end and dealt round-robin into folds. Per-class fold counts and
    overall fold sizes therefore each differ by at most one.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if k < 2:
        raise DomainError("k must be >= 2")
    if k > n:
        raise DomainError(f"k={k} exceeds the number of documents ({n})")
    rng = np.random.default_rng(seed)
    order = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        order.append(rng.permutation(members))
    order = np.concatenate(order)
    folds = np.empty(n, dtype=np.intp)
    folds[order] = np.arange(n) % k
    return FoldPlan(folds, k, seed)


class StratifiedFolds:
    """scikit-learn splitter wrapping :func:`stratified_kfold`."""

    def __init__(self, n_splits=10, random_state=1):
        self.n_splits = n_splits
        self.random_state = random_state

    def split(self, X, y, groups=None):
        return stratified_kfold(y, self.n_splits, self.random_state).splits()

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.n_splits


# --------------------------------------------------------------------------
# confusion matrix and metrics


class ConfusionMatrix:
    """``counts[i, j]`` = documents of true class i predicted as class j."""

    def __init__(self, counts, class_names=None):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ArityError("confusion matrix must be square")
        if (counts < 0).any():
            raise DomainError("negative count")
        self.counts = counts
        if class_names is None:
            class_names = tuple(str(i) for i in range(counts.shape[0]))
        self.class_names = tuple(class_names)

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def tp(self, c):
        return int(self.counts[c, c])

    def fn(self, c):
        return int(self.counts[c].sum() - self.counts[c, c])

    def fp(self, c):
        return int(self.counts[:, c].sum() - self.counts[c, c])

    def tn(self, c):
        return self.total - self.tp(c) - self.fn(c) - self.fp(c)

    def support(self):
        return self.counts.sum(axis=1)

    def __add__(self, other):
        if self.class_names != other.class_names:
            raise ArityError("cannot merge confusion matrices over different classes")
        return ConfusionMatrix(self.counts + other.counts, self.class_names)

    def __eq__(self, other):
        return (isinstance(other, ConfusionMatrix) and self.class_names == other.class_names
                and np.array_equal(self.counts, other.counts))

    __hash__ = None


def confusion(truth, predicted, n_classes=None, class_names=None):
    truth = np.asarray(truth, dtype=np.intp)
    predicted = np.asarray(predicted, dtype=np.intp)
    if truth.shape != predicted.shape:
        raise ArityError(f"{truth.shape[0]} true labels vs {predicted.shape[0]} predictions")
    if n_classes is None:
        n_classes = len(class_names) if class_names is not None else (
            int(max(truth.max(initial=-1), predicted.max(initial=-1))) + 1)
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (truth, predicted), 1)
    return ConfusionMatrix(counts, class_names)


def _rate(num, den, what):
    if den == 0:
        warnings.warn(f"{what} undefined (zero denominator)", UndefinedMetricWarning, stacklevel=3)
        return float("nan")
    return 100.0 * num / den


def accuracy(cm):
    """Correct predictions over all predictions, in percent."""
    if cm.total == 0:
        raise DomainError("accuracy of an empty confusion matrix")
    return 100.0 * float(np.trace(cm.counts)) / cm.total


def sensitivity(cm, c):
    return _rate(cm.tp(c), cm.tp(c) + cm.fn(c), f"sensitivity of class {cm.class_names[c]}")


def specificity(cm, c):
    return _rate(cm.tn(c), cm.tn(c) + cm.fp(c), f"specificity of class {cm.class_names[c]}")


def precision(cm, c):
    return _rate(cm.tp(c), cm.tp(c) + cm.fp(c), f"precision of class {cm.class_names[c]}")


def f_measure(a, b):
    """Harmonic mean of two percentages; 0 (with a warning) when both are 0."""
    if np.isnan(a) or np.isnan(b):
        return float("nan")
    if a < 0 or b < 0:
        raise DomainError("rates must be nonnegative")
    if a + b == 0:
        warnings.warn("F-measure of two zero rates set to 0", UndefinedMetricWarning, stacklevel=2)
        return 0.0
    return 2.0 * a * b / (a + b)


def weighted_mean(values, support):
    """Support-weighted mean over classes whose value is defined."""
    values = np.asarray(values, dtype=np.float64)
    support = np.asarray(support, dtype=np.float64)
    ok = ~np.isnan(values)
    if not ok.any() or support[ok].sum() == 0:
        return float("nan")
    return float(np.average(values[ok], weights=support[ok]))


@dataclass
class ClassMetrics:
    name: str
    support: int
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    sensitivity: float
    specificity: float
    f_sens_spec: float
    f_prec_sens: float


def class_metrics(cm):
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UndefinedMetricWarning)
        for c in range(cm.n_classes):
            p, s, sp_ = precision(cm, c), sensitivity(cm, c), specificity(cm, c)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UndefinedMetricWarning)
                f1 = f_measure(s, sp_)
                f2 = f_measure(p, s)
            rows.append(ClassMetrics(cm.class_names[c], int(cm.support()[c]), cm.tp(c), cm.fp(c),
                                     cm.fn(c), cm.tn(c), p, s, sp_, f1, f2))
    undefined = [str(w.message) for w in caught if issubclass(w.category, UndefinedMetricWarning)]
    for msg in undefined:
        warnings.warn(msg, UndefinedMetricWarning, stacklevel=2)
    return rows, undefined


# --------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class PipelineConfig:
    """What to run inside each fold.

    ``pca_mode`` is ``"fold"`` (fit PCA on the training folds only) or
    ``"whole"`` (fit once on the full dataset before splitting, which leaks
    test-fold statistics; kept for comparison).
    """

    classifier: TrainConfig = field(default_factory=TrainConfig)
    use_pca: bool = False
    variance: float = 0.95
    n_components: int = None
    standardize: bool = False
    pca_mode: str = "fold"

    def __post_init__(self):
        if self.pca_mode not in ("fold", "whole"):
            raise ValueError("pca_mode must be 'fold' or 'whole'")
        if not 0 < self.variance <= 1:
            raise ValueError("variance must be in (0, 1]")

    def make_pca(self):
        return VariancePCA(variance=self.variance, n_components=self.n_components,
                           standardize=self.standardize)

    def make_pipeline(self):
        steps = []
        if self.use_pca and self.pca_mode == "fold":
            steps.append(("pca", self.make_pca()))
        steps.append(("clf", make_classifier(self.classifier)))
        return Pipeline(steps)


@dataclass
class EvalReport:
    dataset: str
    n_features: int
    n_docs: int
    class_names: tuple
    confusion: ConfusionMatrix
    classes: list
    accuracy: float
    precision: float
    sensitivity: float
    specificity: float
    f_sens_spec: float
    f_prec_sens: float
    undefined: list
    fold_sizes: list
    fold_accuracy: list
    fold_features: list
    predictions: np.ndarray
    folds: np.ndarray
    config: dict
    runtime: float = 0.0

    def summary_row(self):
        return {
            "dataset": self.dataset,
            "n_features": self.n_features,
            "precision": self.precision,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "f_measure": self.f_prec_sens,
            "f_measure_sens_spec": self.f_sens_spec,
            "accuracy": self.accuracy,
        }


def build_report(dataset, cm, n_features, fold_sizes, fold_accuracy, fold_features,
                 predictions, folds, config, runtime=0.0):
    classes, undefined = class_metrics(cm)
    support = cm.support()

    def avg(attr):
        return weighted_mean([getattr(r, attr) for r in classes], support)

    return EvalReport(
        dataset=dataset, n_features=int(n_features), n_docs=cm.total,
        class_names=cm.class_names, confusion=cm, classes=classes, accuracy=accuracy(cm),
        precision=avg("precision"), sensitivity=avg("sensitivity"),
        specificity=avg("specificity"), f_sens_spec=avg("f_sens_spec"),
        f_prec_sens=avg("f_prec_sens"), undefined=undefined, fold_sizes=list(fold_sizes),
        fold_accuracy=list(fold_accuracy), fold_features=list(fold_features),
        predictions=predictions, folds=folds, config=config, runtime=runtime)


def _run_fold(template, X, labels, f, train, test):
    try:
        model = clone(template).fit(X[train], labels[train])
        pred = model.predict(X[test])
    except TextcatError as exc:
        raise type(exc)(f"fold {f}: {exc}") from exc
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise TextcatError(f"fold {f}: {exc}") from exc
    k = int(model.named_steps["pca"].n_components_) if "pca" in model.named_steps else None
    return pred, k


def cross_validate(data, config=None, k=10, seed=1, dataset="dataset", n_jobs=None):
    """Stratified k-fold evaluation of ``config`` on ``data``.

    Held-out predictions from all folds are pooled into one confusion matrix;
    per-fold accuracy and feature counts are kept for inspection. Folds run
    in parallel when ``n_jobs`` is set, with results identical to a serial run.
    """
    if not isinstance(data, LabeledSparseMatrix):
        raise TypeError("data must be a LabeledSparseMatrix")
    config = config or PipelineConfig()
    start = time.perf_counter()
    plan = stratified_kfold(data.labels, k, seed)
    X = data.X
    n_features = data.n_features
    whole_k = None
    if config.use_pca and config.pca_mode == "whole":
        pca = config.make_pca().fit(X)
        X = pca.transform(X)
        whole_k = pca.n_components_
    template = config.make_pipeline()
    splits = list(plan.splits())
    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(template, X, data.labels, f, train, test)
        for f, (train, test) in enumerate(splits))
    predictions = np.empty(data.n_docs, dtype=np.intp)
    fold_acc, fold_feat = [], []
    for (train, test), (pred, fold_k) in zip(splits, results):
        predictions[test] = pred
        fold_acc.append(100.0 * float(np.mean(pred == data.labels[test])))
        if whole_k is not None:
            fold_feat.append(int(whole_k))
        elif fold_k is not None:
            fold_feat.append(fold_k)
        else:
            fold_feat.append(n_features)
    cm = confusion(data.labels, predictions, class_names=data.class_names)
    used = int(round(float(np.mean(fold_feat))))
    echo = {
        "folds": k,
        "seed": seed,
        "use_pca": config.use_pca,
        "variance": config.variance,
        "n_components": config.n_components,
        "standardize": config.standardize,
        "pca_mode": config.pca_mode,
        "classifier": config.classifier.to_dict(),
    }
    return build_report(dataset, cm, used, plan.sizes(), fold_acc, fold_feat, predictions,
                        plan.folds, echo, time.perf_counter() - start)


# --------------------------------------------------------------------------
# serialisation


def _fmt(x, digits=2):
    return "nan" if x is None or (isinstance(x, float) and np.isnan(x)) else f"{x:.{digits}f}"


TABLE_COLUMNS = ("Data set", "N. of Features", "Precision", "Sensitivity", "F-measure", "Accuracy")


def format_table(reports, title=None):
    """Aligned-column table: one row per report, percentages to two decimals."""
    rows = [TABLE_COLUMNS]
    for r in reports:
        rows.append((r.dataset, str(r.n_features), _fmt(r.precision), _fmt(r.sensitivity),
                     _fmt(r.f_prec_sens), _fmt(r.accuracy)))
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    lines = [] if title is None else [title]
    for n, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                               for i, (cell, w) in enumerate(zip(row, widths))).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for key in value:
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], out)
    else:
        out.append((prefix, value))


def report_tsv(report):
    """Machine-readable report: ``section<TAB>key<TAB>value`` lines."""
    lines = ["section\tkey\tvalue"]
    for key, value in report.summary_row().items():
        lines.append(f"summary\t{key}\t{_fmt(value, 6) if isinstance(value, float) else value}")
    lines.append(f"summary\tn_docs\t{report.n_docs}")
    lines.append(f"summary\tundefined_metrics\t{len(report.undefined)}")
    pairs = []
    _flatten("", report.config, pairs)
    for key, value in pairs:
        lines.append(f"config\t{key}\t{value}")
    for r in report.classes:
        for attr in ("support", "tp", "fp", "fn", "tn"):
            lines.append(f"class:{r.name}\t{attr}\t{getattr(r, attr)}")
        for attr in ("precision", "sensitivity", "specificity", "f_prec_sens", "f_sens_spec"):
            lines.append(f"class:{r.name}\t{attr}\t{_fmt(getattr(r, attr), 6)}")
    for f, (size, acc, feat) in enumerate(zip(report.fold_sizes, report.fold_accuracy,
                                              report.fold_features)):
        lines.append(f"fold:{f}\tsize\t{size}")
        lines.append(f"fold:{f}\taccuracy\t{_fmt(acc, 6)}")
        lines.append(f"fold:{f}\tn_features\t{feat}")
    for i, row in enumerate(report.confusion.counts):
        lines.append(f"confusion\t{report.class_names[i]}\t{' '.join(str(int(v)) for v in row)}")
    return "\n".join(lines) + "\n"


def report_text(report):
    """Human-readable report: summary table, per-class metrics, confusion matrix."""
    out = [format_table([report])]
    out.append(f"F-measure above pairs precision with sensitivity; "
               f"sensitivity/specificity variant: {_fmt(report.f_sens_spec)}")
    out.append(f"weighted specificity: {_fmt(report.specificity)}")
    out.append("")
    header = ("class", "support", "precision", "sensitivity", "specificity", "F(P,S)", "F(S,Sp)")
    rows = [header] + [(r.name, str(r.support), _fmt(r.precision), _fmt(r.sensitivity),
                        _fmt(r.specificity), _fmt(r.f_prec_sens), _fmt(r.f_sens_spec))
                       for r in report.classes]
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    for row in rows:
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                             for i, (c, w) in enumerate(zip(row, widths))).rstrip())
    out.append("")
    out.append("confusion matrix (rows = true class, columns = predicted)")
    names = report.class_names
    w = max(max(len(n) for n in names), max(len(str(v)) for v in report.confusion.counts.ravel()))
    out.append(" " * (w + 2) + " ".join(n.rjust(w) for n in names))
    for name, row in zip(names, report.confusion.counts):
        out.append(name.ljust(w + 2) + " ".join(str(int(v)).rjust(w) for v in row))
    if report.undefined:
        out.append("")
        out.append("undefined metrics (excluded from averages):")
        out.extend(f"  {msg}" for msg in report.undefined)
    return "\n".join(out) + "\n"
