"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The public CNAE-9 and DBWorld files are not bundled. Point ``TEXTCAT_CNAE9``
and ``TEXTCAT_DBWORLD`` at local copies to check the published numbers; when
a file is absent the criterion is reported as FAIL (unverified) and the test
is marked xfail rather than passed. The determinism and runtime criterion
runs on the real files when present and otherwise on seeded synthetic files
of identical shape.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import pytest
import synth

from textcat import cli
from textcat.classifiers import TrainConfig
from textcat.corpus import load_cnae9, load_dbworld
from textcat.evaluation import PipelineConfig, cross_validate

ROOT = Path(__file__).resolve().parent.parent
CNAE9 = os.environ.get("TEXTCAT_CNAE9")
DBWORLD = os.environ.get("TEXTCAT_DBWORLD")

# published accuracies (%), 10-fold CV
NO_PCA = {"rf": 90.2, "svm": 90.83, "j48": 78.33, "knn": 81.94}
WITH_PCA = {"rf": 93.6, "svm": 94.16, "knn": 85.0}
CNAE9_COMPONENTS, DBWORLD_COMPONENTS = 397, 52
ACC_TOL, CNAE9_K_TOL, DBWORLD_K_TOL = 4.0, 40, 15


@pytest.fixture(scope="module")
def verdict(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, ok, detail):
        line = f"ACCEPTANCE criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)
    return emit


def _unavailable(verdict, number, what):
    verdict(number, False, f"unverified: {what} not available (set the environment variable)")
    pytest.xfail(f"{what} not available")


_CACHE = {}


def _cnae9_run(algorithm, use_pca):
    key = (algorithm, use_pca)
    if key not in _CACHE:
        if "data" not in _CACHE:
            _CACHE["data"] = load_cnae9(CNAE9)
        data = _CACHE["data"]
        cfg = PipelineConfig(classifier=TrainConfig(algorithm=algorithm), use_pca=use_pca,
                             variance=0.95)
        _CACHE[key] = cross_validate(data, cfg, k=10, seed=1, dataset="CNAE-9")
    return _CACHE[key]


@pytest.mark.dataset
def test_criterion_1_cnae9_without_pca(verdict):
    if not (CNAE9 and Path(CNAE9).is_file()):
        _unavailable(verdict, 1, "CNAE-9 data file (TEXTCAT_CNAE9)")
    start = time.perf_counter()
    got = {a: _cnae9_run(a, False).accuracy for a in NO_PCA}
    elapsed = time.perf_counter() - start
    misses = {a: (got[a], ref) for a, ref in NO_PCA.items() if abs(got[a] - ref) > ACC_TOL}
    ok = not misses and elapsed < 600
    verdict(1, ok, ", ".join(f"{a} {got[a]:.2f}% (ref {NO_PCA[a]})" for a in NO_PCA)
            + f"; {elapsed:.0f}s")
    assert not misses, misses
    assert elapsed < 600


@pytest.mark.dataset
def test_criterion_2_cnae9_with_pca(verdict):
    if not (CNAE9 and Path(CNAE9).is_file()):
        _unavailable(verdict, 2, "CNAE-9 data file (TEXTCAT_CNAE9)")
    on = {a: _cnae9_run(a, True) for a in NO_PCA}
    off = {a: _cnae9_run(a, False) for a in NO_PCA}
    k = on["rf"].n_features
    k_ok = abs(k - CNAE9_COMPONENTS) <= CNAE9_K_TOL
    acc_ok = all(abs(on[a].accuracy - ref) <= ACC_TOL for a, ref in WITH_PCA.items())
    direction = {a: on[a].accuracy > off[a].accuracy for a in NO_PCA}
    ok = k_ok and acc_ok and all(direction.values())
    verdict(2, ok, f"components {k} (ref {CNAE9_COMPONENTS}); "
            + ", ".join(f"{a} {off[a].accuracy:.2f}->{on[a].accuracy:.2f}" for a in NO_PCA))
    assert k_ok and acc_ok and all(direction.values())


@pytest.mark.dataset
def test_criterion_3_dbworld(verdict):
    if not (DBWORLD and Path(DBWORLD).is_file()):
        _unavailable(verdict, 3, "DBWorld data file (TEXTCAT_DBWORLD)")
    data = load_dbworld(DBWORLD)
    reports = {}
    for algorithm in NO_PCA:
        for use_pca in (False, True):
            cfg = PipelineConfig(classifier=TrainConfig(algorithm=algorithm), use_pca=use_pca)
            reports[algorithm, use_pca] = cross_validate(data, cfg, k=10, seed=1)
    k = reports["knn", True].n_features
    k_ok = abs(k - DBWORLD_COMPONENTS) <= DBWORLD_K_TOL
    knn = f"knn {reports['knn', False].accuracy:.2f}->{reports['knn', True].accuracy:.2f}"
    verdict(3, k_ok and data.n_docs == 64,
            f"8 runs complete, components {k} (ref {DBWORLD_COMPONENTS}), {knn} (as measured)")
    assert data.n_docs == 64 and k_ok


def test_criterion_4_raw_text_end_to_end(verdict, text_corpus, tmp_path):
    problems = []
    for algorithm in NO_PCA:
        for use_pca in (False, True):
            cfg = cli.resolve_config({"datasets": [f"Fixture=text:{text_corpus}"],
                                      "classifiers": [algorithm], "pca": [use_pca]})
            spec = cli.build_specs(cfg)[0]
            out = tmp_path / spec.identifier
            report = cli.run(spec, directory=out)
            rows = [line.split("\t") for line in (out / "report.tsv").read_text().splitlines()]
            summary = {r[1]: r[2] for r in rows if r[0] == "summary"}
            checks = {
                "three fields per line": all(len(r) == 3 for r in rows),
                "all documents pooled": int(summary["n_docs"]) == report.n_docs == 60,
                "three classes": len(report.class_names) == 3,
                "percentages in range": all(0 <= float(summary[m]) <= 100 for m in
                                            ("precision", "sensitivity", "accuracy")),
                "raw-text route recorded": report.config["input"].startswith("raw text"),
                "files written": all((out / f).is_file() for f in
                                     ("report.txt", "report.tsv", "config.yaml")),
            }
            problems += [f"{spec.identifier}: {name}" for name, ok in checks.items() if not ok]
    verdict(4, not problems, "8 raw-text runs on a 3-class fixture"
            + (f"; problems: {problems}" if problems else ", reports well formed"))
    assert not problems


def test_criterion_5_property_suites(verdict):
    cmd = [sys.executable, "-m", "pytest", "-q", "-m", "property", "-p", "no:cacheprovider",
           str(ROOT / "tests"), "--ignore", str(ROOT / "tests" / "test_acceptance.py")]
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    tail = (proc.stdout.strip().splitlines() or ["no output"])[-1]
    verdict(5, proc.returncode == 0, tail)
    assert proc.returncode == 0, proc.stdout[-4000:]


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_6_matrix_determinism(verdict, tmp_path):
    real = all(p and Path(p).is_file() for p in (CNAE9, DBWORLD))
    if real:
        cnae9, dbworld, source = CNAE9, DBWORLD, "published data files"
    else:
        cnae9 = synth.cnae9_like(tmp_path / "cnae9.csv", seed=0)
        dbworld = synth.dbworld_like(tmp_path / "dbworld.arff", seed=0)
        source = "synthetic stand-ins of the same shape (published files absent)"
    corpus = synth.text_corpus(tmp_path / "text", seed=0)
    cfg = cli.resolve_config({"datasets": [f"CNAE-9=cnae9:{cnae9}",
                                           f"DBWorld=dbworld:{dbworld}",
                                           f"Fixture=text:{corpus}"]})
    specs = cli.build_specs(cfg)
    runs, times = [], []
    for name in ("first", "second"):
        start = time.perf_counter()
        result = cli.run_matrix(specs, tmp_path / name)
        times.append(time.perf_counter() - start)
        runs.append(result)
    a, b = _snapshot(tmp_path / "first"), _snapshot(tmp_path / "second")
    complete = all(len(r.reports) == 24 and not r.failures for r in runs)
    identical = a == b
    fast = max(times) < 1800
    verdict(6, complete and identical and fast,
            f"{len(specs)} cells, {len(a)} files {'identical' if identical else 'DIFFER'}, "
            f"runs {times[0]:.0f}s / {times[1]:.0f}s; {source}")
    assert len(specs) == 24 and complete
    assert identical, sorted(k for k in a if a.get(k) != b.get(k))
    assert fast
