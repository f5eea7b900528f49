"""Command-line experiment runner.

Subcommands
-----------
run         cross-validate one classifier on one dataset
matrix      datasets x classifiers x {PCA off, on}, with comparison tables
describe    dataset summary (documents, features, classes, sparsity)
dump-model  train on a full dataset and write the fitted model as JSON

Settings come from built-in defaults, then an optional YAML ``--config``
file, then command-line flags (flags win). Exit status is 0 when every
experiment succeeds, 3 when some fail and 1 when all fail or the command
cannot start.
"""

import argparse
import dataclasses
import os
import sys
import tempfile
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from joblib import Parallel, delayed
from sklearn.pipeline import Pipeline

from . import persistence
from .classifiers import ALGORITHMS, TrainConfig, make_classifier
from .corpus import load_dataset
from .evaluation import PipelineConfig, cross_validate, format_table, report_text, report_tsv
from .exceptions import TextcatError
from .indexing import TermWeighter, WeightingScheme, index_documents
from .preprocess import TextPreprocessor, default_stop_list

EXIT_OK, EXIT_FAILURE, EXIT_PARTIAL = 0, 1, 3
DATASET_KINDS = ("cnae9", "dbworld", "arff", "sparse", "text")
_TRAIN_FIELDS = tuple(f.name for f in dataclasses.fields(TrainConfig)
                      if f.name not in ("algorithm", "rng_seed"))


class StageError(Exception):
    """Failure of one experiment, tagged with the pipeline stage that raised it."""

    def __init__(self, stage, error):
        self.stage = stage
        self.error = error
        super().__init__(f"[stage={stage}] {type(error).__name__}: {error}")

    def __reduce__(self):
        return type(self), (self.stage, self.error)


# --------------------------------------------------------------------------
# experiment specifications


@dataclass(frozen=True)
class DatasetRef:
    name: str
    kind: str
    path: str

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; choose from {DATASET_KINDS}")

    @classmethod
    def parse(cls, text):
        """``[name=]kind:path``; the name defaults to the file or folder stem."""
        name = None
        if "=" in text.split(":", 1)[0]:
            name, text = text.split("=", 1)
        if ":" not in text:
            raise ValueError(f"dataset must look like kind:path, got {text!r}")
        kind, path = text.split(":", 1)
        return cls(name or Path(path).stem or kind, kind, path)

    @property
    def vectorized(self):
        return self.kind != "text"


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: DatasetRef
    pipeline: PipelineConfig
    folds: int = 10
    seed: int = 1
    weighting: str = "tfidf"
    min_df: int = 1
    log_base: str = "e"
    out_dir: str = field(default="results", compare=False)

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        WeightingScheme(self.weighting)

    @property
    def algorithm(self):
        return self.pipeline.classifier.algorithm

    @property
    def identifier(self):
        pca = "pca" if self.pipeline.use_pca else "nopca"
        return f"{self.dataset.name}-{self.algorithm}-{pca}"


DEFAULTS = {
    "datasets": [],
    "classifiers": list(ALGORITHMS),
    "pca": [False, True],
    "variance": 0.95,
    "standardize": False,
    "pca_mode": "fold",
    "folds": 10,
    "seed": 1,
    "weighting": "tfidf",
    "min_df": 1,
    "log_base": "e",
    "workers": 1,
    "out": "results",
    "train": {},
}


def _as_bool_list(value):
    if isinstance(value, str):
        value = _as_list(value)
    values = value if isinstance(value, (list, tuple)) else [value]
    out = []
    for v in values:
        if isinstance(v, bool):
            out.append(v)
        elif str(v).lower() in ("on", "true", "yes", "1"):
            out.append(True)
        elif str(v).lower() in ("off", "false", "no", "0"):
            out.append(False)
        else:
            raise ValueError(f"pca must be on/off, got {v!r}")
    return out


def _as_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return list(value)


def resolve_config(config=None, overrides=None):
    """Merge defaults, a config mapping and flag overrides into one mapping."""
    cfg = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.items()}
    for source in (config or {}, overrides or {}):
        unknown = set(source) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        for key, value in source.items():
            if value is None:
                continue
            if key == "train":
                cfg["train"].update(value)
            else:
                cfg[key] = value
    cfg["classifiers"] = _as_list(cfg["classifiers"])
    cfg["pca"] = _as_bool_list(cfg["pca"])
    datasets = []
    for d in cfg["datasets"]:
        if isinstance(d, DatasetRef):
            datasets.append(d)
        elif isinstance(d, str):
            datasets.append(DatasetRef.parse(d))
        else:
            datasets.append(DatasetRef(str(d.get("name") or Path(d["path"]).stem),
                                       d["kind"], str(d["path"])))
    cfg["datasets"] = datasets
    unknown = set(cfg["train"]) - set(_TRAIN_FIELDS)
    if unknown:
        raise ValueError(f"unknown classifier settings: {sorted(unknown)}")
    return cfg


def build_specs(cfg):
    """Cross product datasets x classifiers x pca flags, in that nesting order."""
    specs = []
    for ds in cfg["datasets"]:
        for algorithm in cfg["classifiers"]:
            train = TrainConfig(algorithm=algorithm, rng_seed=int(cfg["seed"]), **cfg["train"])
            for use_pca in cfg["pca"]:
                pipe = PipelineConfig(classifier=train, use_pca=use_pca,
                                      variance=float(cfg["variance"]),
                                      standardize=bool(cfg["standardize"]),
                                      pca_mode=cfg["pca_mode"])
                spec = ExperimentSpec(ds, pipe, int(cfg["folds"]), int(cfg["seed"]),
                                      cfg["weighting"], int(cfg["min_df"]), str(cfg["log_base"]),
                                      str(cfg["out"]))
                specs.append(spec)
    ids = [s.identifier for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError("experiment identifiers are not unique; give datasets distinct names")
    return specs


def spec_config(spec):
    """Config mapping that resolves back to exactly ``spec``."""
    clf = spec.pipeline.classifier
    return {
        "datasets": [{"name": spec.dataset.name, "kind": spec.dataset.kind,
                      "path": spec.dataset.path}],
        "classifiers": [clf.algorithm],
        "pca": [spec.pipeline.use_pca],
        "variance": spec.pipeline.variance,
        "standardize": spec.pipeline.standardize,
        "pca_mode": spec.pipeline.pca_mode,
        "folds": spec.folds,
        "seed": spec.seed,
        "weighting": spec.weighting,
        "min_df": spec.min_df,
        "log_base": spec.log_base,
        "train": {name: getattr(clf, name) for name in _TRAIN_FIELDS},
    }


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return data


# --------------------------------------------------------------------------
# running


def atomic_write(path, text):
    """Write ``text`` so that ``path`` is either complete or untouched."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_matrix(ref, weighting="tfidf", min_df=1, log_base="e"):
    """Load ``ref`` as a labelled matrix, indexing raw text when needed."""
    if not os.path.exists(ref.path):
        raise StageError("load", FileNotFoundError(f"no such file or directory: {ref.path}"))
    try:
        data = load_dataset(ref.kind, ref.path)
    except (OSError, ValueError, TextcatError) as exc:
        raise StageError("load", exc) from exc
    if ref.vectorized:
        return data
    try:
        matrix, _ = index_documents(data, default_stop_list(), WeightingScheme(weighting),
                                    min_df=min_df, log_base=log_base)
    except (ValueError, TextcatError) as exc:
        raise StageError("index", exc) from exc
    return matrix


def _evaluate(spec, data):
    try:
        report = cross_validate(data, spec.pipeline, spec.folds, spec.seed, spec.dataset.name)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, TextcatError) as exc:
        raise StageError("evaluate", exc) from exc
    report.config = {
        "dataset": {"name": spec.dataset.name, "kind": spec.dataset.kind,
                    "path": spec.dataset.path},
        "input": "vectorized" if spec.dataset.vectorized else "raw text: preprocess + index",
        "weighting": spec.weighting if not spec.dataset.vectorized else "as supplied",
        "min_df": spec.min_df,
        "log_base": spec.log_base,
        **report.config,
    }
    return report


def write_report(report, spec, directory):
    directory = Path(directory)
    try:
        atomic_write(directory / "report.txt", report_text(report))
        atomic_write(directory / "report.tsv", report_tsv(report))
        atomic_write(directory / "config.yaml",
                     yaml.safe_dump(spec_config(spec), sort_keys=False))
    except OSError as exc:
        raise StageError("write", exc) from exc


def run(spec, data=None, directory=None):
    """Load (unless ``data`` is given), cross-validate and write report files."""
    if data is None:
        data = load_matrix(spec.dataset, spec.weighting, spec.min_df, spec.log_base)
    report = _evaluate(spec, data)
    write_report(report, spec, directory or spec.out_dir)
    return report


def _run_cell(spec, data, directory):
    if isinstance(data, StageError):
        return data
    try:
        return run(spec, data, directory)
    except StageError as exc:
        return exc
    except Exception as exc:  # keep the matrix going; the failure is recorded
        return StageError("evaluate", exc)


def comparison_table(reports, algorithm):
    """Accuracy without vs with PCA per dataset for one classifier."""
    by_ds = {}
    for r in reports:
        if r.config["classifier"]["algorithm"] == algorithm:
            by_ds.setdefault(r.dataset, {})[r.config["use_pca"]] = r
    header = ("Data set", "Features", "Acc. without PCA", "PCA features", "Acc. with PCA",
              "Difference")
    rows = [header]
    for name, pair in by_ds.items():
        off, on = pair.get(False), pair.get(True)
        fmt = lambda r: "-" if r is None else f"{r.accuracy:.2f}"  # noqa: E731
        feats = lambda r: "-" if r is None else str(r.n_features)  # noqa: E731
        diff = "-" if off is None or on is None else f"{on.accuracy - off.accuracy:+.2f}"
        rows.append((name, feats(off), fmt(off), feats(on), fmt(on), diff))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = [f"classifier: {algorithm}"]
    for n, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                               for i, (c, w) in enumerate(zip(row, widths))).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


@dataclass
class MatrixResult:
    specs: list
    reports: dict  # identifier -> EvalReport
    failures: dict  # identifier -> StageError

    @property
    def exit_status(self):
        if not self.failures:
            return EXIT_OK
        return EXIT_PARTIAL if self.reports else EXIT_FAILURE


def run_matrix(specs, out_dir, workers=1):
    """Run every spec, write per-spec reports and the matrix-level summaries."""
    out_dir = Path(out_dir)
    cache = {}
    for spec in specs:
        key = (spec.dataset, spec.weighting, spec.min_df, spec.log_base)
        if key not in cache:
            try:
                cache[key] = load_matrix(*key)
            except StageError as exc:
                cache[key] = exc
    cells = [(spec, cache[(spec.dataset, spec.weighting, spec.min_df, spec.log_base)])
             for spec in specs]
    outcomes = Parallel(n_jobs=workers)(
        delayed(_run_cell)(spec, data, out_dir / spec.identifier) for spec, data in cells)
    reports, failures = {}, {}
    for spec, outcome in zip(specs, outcomes):
        if isinstance(outcome, StageError):
            failures[spec.identifier] = outcome
        else:
            reports[spec.identifier] = outcome
    ok = [reports[s.identifier] for s in specs if s.identifier in reports]

    plot = ["dataset\tclassifier\tpca\tn_features\taccuracy"]
    for spec in specs:
        r = reports.get(spec.identifier)
        if r is not None:
            plot.append(f"{r.dataset}\t{spec.algorithm}\t{'on' if spec.pipeline.use_pca else 'off'}"
                        f"\t{r.n_features}\t{r.accuracy:.6f}")
    atomic_write(out_dir / "plotdata.tsv", "\n".join(plot) + "\n")

    algorithms = list(dict.fromkeys(s.algorithm for s in specs))
    for algorithm in algorithms:
        atomic_write(out_dir / f"comparison_{algorithm}.txt", comparison_table(ok, algorithm))
        for use_pca in (False, True):
            rows = [r for s, r in zip(specs, [reports.get(s.identifier) for s in specs])
                    if r is not None and s.algorithm == algorithm and s.pipeline.use_pca == use_pca]
            if rows:
                title = f"{algorithm} {'with' if use_pca else 'without'} PCA"
                suffix = "pca" if use_pca else "nopca"
                atomic_write(out_dir / f"table_{algorithm}_{suffix}.txt", format_table(rows, title))

    fail_lines = ["experiment\tstage\terror"]
    for ident, err in failures.items():
        message = str(err.error).replace("\t", " ").replace("\n", " ")
        fail_lines.append(f"{ident}\t{err.stage}\t{type(err.error).__name__}: {message}")
    atomic_write(out_dir / "failures.tsv", "\n".join(fail_lines) + "\n")
    return MatrixResult(specs, reports, failures)


def describe_dataset(ref, weighting="tfidf"):
    """Summary lines: documents, features, classes, distribution, sparsity."""
    data = load_matrix(ref, weighting)
    n, f = data.X.shape
    density = data.X.nnz / (n * f) if n * f else 0.0
    lines = [
        f"dataset: {ref.name} ({ref.kind}, {ref.path})",
        f"input: {'vectorized' if ref.vectorized else 'raw text: preprocess + index'}",
        f"documents: {n}",
        f"features: {f}",
        f"classes: {data.n_classes}",
        f"nonzeros: {data.X.nnz}",
        f"sparsity: {100.0 * (1.0 - density):.2f}%",
        "class distribution:",
    ]
    width = max(len(c) for c in data.class_names)
    for name, count in zip(data.class_names, data.class_counts()):
        lines.append(f"  {name.ljust(width)}  {int(count)}")
    return "\n".join(lines) + "\n"


def train_full_model(spec):
    """Fit the spec's pipeline on the whole dataset.

    Raw-text datasets get a pipeline that accepts strings (preprocessing and
    term weighting included).
    """
    steps = []
    if spec.dataset.vectorized:
        data = load_matrix(spec.dataset)
        X, y, names = data.X, data.labels, data.class_names
    else:
        try:
            docs = load_dataset("text", spec.dataset.path)
        except (OSError, ValueError, TextcatError) as exc:
            raise StageError("load", exc) from exc
        names = tuple(sorted({d.label for d in docs}))
        X = [d.text for d in docs]
        y = np.array([names.index(d.label) for d in docs])
        steps += [("preprocess", TextPreprocessor()),
                  ("weight", TermWeighter(spec.weighting, spec.min_df, log_base=spec.log_base))]
    if spec.pipeline.use_pca:
        steps.append(("pca", spec.pipeline.make_pca()))
    steps.append(("clf", make_classifier(spec.pipeline.classifier)))
    try:
        model = Pipeline(steps).fit(X, y)
    except (ValueError, TextcatError) as exc:
        raise StageError("train", exc) from exc
    return model, names


# --------------------------------------------------------------------------
# argument handling


def _parser():
    p = argparse.ArgumentParser(prog="textcat", description="Text categorisation experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, many):
        sp.add_argument("--config", help="YAML configuration file")
        sp.add_argument("--dataset", action="append",
                        help="[name=]kind:path, kind in " + ", ".join(DATASET_KINDS)
                        + (" (repeatable)" if many else ""))
        sp.add_argument("--classifier",
                        help="rf, svm, j48 or knn" + (" (comma-separated list)" if many else ""))
        sp.add_argument("--pca", help="on or off" + (" (comma-separated list)" if many else ""))
        sp.add_argument("--variance", type=float, help="retained variance fraction, in (0, 1]")
        sp.add_argument("--folds", type=int, help="cross-validation folds")
        sp.add_argument("--seed", type=int, help="seed for folds and classifiers")
        sp.add_argument("--weighting", choices=[w.value for w in WeightingScheme],
                        help="term weighting for raw-text datasets")
        sp.add_argument("--out", help="output directory")

    common(sub.add_parser("run", help="cross-validate one configuration"), many=False)
    m = sub.add_parser("matrix", help="run the dataset x classifier x PCA matrix")
    common(m, many=True)
    m.add_argument("--workers", type=int, help="experiments run concurrently")
    d = sub.add_parser("describe", help="summarise a dataset")
    d.add_argument("--dataset", required=True, action="append", help="[name=]kind:path")
    d.add_argument("--weighting", default="tfidf", choices=[w.value for w in WeightingScheme])
    common(sub.add_parser("dump-model", help="train on a full dataset and save the model"),
           many=False)
    return p


def _overrides(args):
    out = {}
    for key in ("variance", "folds", "seed", "weighting", "out", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if args.dataset:
        out["datasets"] = args.dataset
    if args.classifier:
        out["classifiers"] = args.classifier
    if args.pca:
        out["pca"] = _as_list(args.pca)
    return out


def _fail(stage, exc):
    err = exc.error if isinstance(exc, StageError) else exc
    stage = exc.stage if isinstance(exc, StageError) else stage
    print(f"textcat: error [stage={stage}] {type(err).__name__}: {err}", file=sys.stderr)
    if os.environ.get("TEXTCAT_DEBUG"):
        traceback.print_exception(type(err), err, err.__traceback__)
    return EXIT_FAILURE


def _single_spec(args, defaults):
    config = read_config(args.config) if args.config else {}
    cfg = resolve_config({**defaults, **config}, _overrides(args))
    specs = build_specs(cfg)
    if len(specs) != 1:
        raise ValueError(f"{args.command} needs exactly one dataset, classifier and PCA "
                         f"setting; the configuration gives {len(specs)}")
    return specs[0]


def main(argv=None):
    args = _parser().parse_args(argv)
    start = time.perf_counter()

    if args.command == "describe":
        status = EXIT_OK
        for text in args.dataset:
            try:
                sys.stdout.write(describe_dataset(DatasetRef.parse(text), args.weighting))
            except (StageError, ValueError) as exc:
                status = _fail("config", exc)
        return status

    if args.command in ("run", "dump-model"):
        try:
            spec = _single_spec(args, {"classifiers": "rf", "pca": "off"})
        except (OSError, ValueError, yaml.YAMLError) as exc:
            return _fail("config", exc)
        if args.command == "run":
            try:
                report = run(spec)
            except StageError as exc:
                return _fail(exc.stage, exc)
            sys.stdout.write(format_table([report]))
            print(f"wrote {Path(spec.out_dir) / 'report.txt'} "
                  f"({time.perf_counter() - start:.1f}s)")
            return EXIT_OK
        try:
            model, names = train_full_model(spec)
            meta = {"classes": list(names), "config": spec_config(spec)}
            path = Path(spec.out_dir) / "model.json"
            atomic_write(path, persistence.dumps(model, meta))
        except StageError as exc:
            return _fail(exc.stage, exc)
        except OSError as exc:
            return _fail("write", exc)
        print(f"wrote {path}")
        return EXIT_OK

    try:
        cfg = resolve_config(read_config(args.config) if args.config else None, _overrides(args))
        specs = build_specs(cfg)
        if not specs:
            raise ValueError("no experiments: give at least one --dataset")
    except (OSError, ValueError, yaml.YAMLError) as exc:
        return _fail("config", exc)
    try:
        result = run_matrix(specs, cfg["out"], int(cfg["workers"]))
    except OSError as exc:
        return _fail("write", exc)
    for algorithm in dict.fromkeys(s.algorithm for s in specs):
        sys.stdout.write(comparison_table(list(result.reports.values()), algorithm) + "\n")
    for ident, err in result.failures.items():
        print(f"textcat: {ident} failed {err}", file=sys.stderr)
    print(f"{len(result.reports)} of {len(specs)} experiments succeeded "
          f"({time.perf_counter() - start:.1f}s); results in {cfg['out']}")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
