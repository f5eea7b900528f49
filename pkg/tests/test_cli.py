import dataclasses
import os

import numpy as np
import pytest
import scipy.sparse as sp
import yaml

from textcat import cli, persistence
from textcat.corpus import LabeledSparseMatrix, write_sparse

FAST = {"forest_trees": 5, "svm_epochs": 50}


@pytest.fixture
def tiny(tmp_path):
    """Four documents, two classes, three terms."""
    X = sp.csr_matrix(np.array([[3, 0, 1], [2, 1, 0], [0, 4, 1], [1, 3, 2]], dtype=float))
    path = tmp_path / "tiny.txt"
    write_sparse(LabeledSparseMatrix(X, [0, 0, 1, 1], ("ham", "spam")), path)
    return path


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_run_smoke_on_four_rows(tiny, tmp_path, capsys):
    out = tmp_path / "out"
    status = cli.main(["run", "--dataset", f"sparse:{tiny}", "--classifier", "knn",
                       "--folds", "2", "--out", str(out)])
    assert status == cli.EXIT_OK
    tsv = (out / "report.tsv").read_text()
    assert "summary\tn_docs\t4" in tsv
    assert "config\tinput\tvectorized" in tsv
    assert (out / "report.txt").read_text().startswith("Data set")
    assert "Accuracy" in capsys.readouterr().out


def test_identical_runs_are_byte_identical(tiny, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["run", "--dataset", f"sparse:{tiny}", "--classifier", "j48",
                         "--pca", "on", "--folds", "2", "--out", str(tmp_path / name)]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_raw_text_run_records_route(text_corpus, tmp_path):
    ref = cli.DatasetRef.parse(f"fixture=text:{text_corpus}")
    spec = cli.build_specs(cli.resolve_config(
        {"datasets": [ref], "classifiers": ["knn"], "pca": [False], "folds": 3}))[0]
    report = cli.run(spec, directory=tmp_path / "r")
    assert report.config["input"] == "raw text: preprocess + index"
    assert report.config["weighting"] == "tfidf"
    assert report.n_docs == 60 and len(report.class_names) == 3


def test_config_echo_round_trips(tiny):
    cfg = cli.resolve_config({"datasets": [f"t=sparse:{tiny}"], "classifiers": "svm,rf",
                              "pca": "on,off", "variance": 0.8, "folds": 3, "seed": 9,
                              "train": {"svm_c": 2.0}})
    specs = cli.build_specs(cfg)
    assert [s.identifier for s in specs] == ["t-svm-pca", "t-svm-nopca", "t-rf-pca",
                                             "t-rf-nopca"]
    for spec in specs:
        echoed = yaml.safe_load(yaml.safe_dump(cli.spec_config(spec)))
        assert cli.build_specs(cli.resolve_config(echoed)) == [spec]


def test_flags_override_config_file(tiny, tmp_path):
    conf = tmp_path / "c.yaml"
    conf.write_text(yaml.safe_dump({"datasets": [f"sparse:{tiny}"], "classifiers": "knn",
                                    "folds": 4, "seed": 5}))
    out = tmp_path / "o"
    assert cli.main(["run", "--config", str(conf), "--folds", "2", "--out", str(out)]) == 0
    echo = yaml.safe_load((out / "config.yaml").read_text())
    assert echo["folds"] == 2 and echo["seed"] == 5 and echo["classifiers"] == ["knn"]


def test_config_errors_are_reported(tmp_path, capsys):
    conf = tmp_path / "bad.yaml"
    conf.write_text("colour: blue\n")
    assert cli.main(["run", "--config", str(conf)]) == cli.EXIT_FAILURE
    assert "[stage=config]" in capsys.readouterr().err
    with pytest.raises(ValueError):
        cli.resolve_config({"train": {"nonsense": 1}})
    with pytest.raises(ValueError):
        cli.resolve_config({"pca": "maybe"})
    with pytest.raises(ValueError):
        cli.DatasetRef.parse("nocolon")


def test_duplicate_identifiers_rejected(tiny):
    cfg = cli.resolve_config({"datasets": [f"x=sparse:{tiny}", f"x=sparse:{tiny}"]})
    with pytest.raises(ValueError, match="not unique"):
        cli.build_specs(cfg)


def test_missing_dataset_names_load_stage(tmp_path, capsys):
    status = cli.main(["run", "--dataset", f"sparse:{tmp_path / 'nope.txt'}",
                       "--out", str(tmp_path / "o")])
    assert status == cli.EXIT_FAILURE
    assert "textcat: error [stage=load] FileNotFoundError" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def _matrix_specs(cnae9_file, dbworld_file, text_corpus, out):
    cfg = cli.resolve_config({
        "datasets": [f"CNAE-9=cnae9:{cnae9_file}", f"DBWorld=dbworld:{dbworld_file}",
                     f"Fixture=text:{text_corpus}"],
        "folds": 3, "train": FAST, "out": str(out)})
    return cli.build_specs(cfg)


def test_matrix_with_one_bad_cell(cnae9_file, dbworld_file, text_corpus, tmp_path):
    specs = _matrix_specs(cnae9_file, dbworld_file, text_corpus, tmp_path)
    assert len(specs) == 24
    bad = specs[5]
    specs[5] = dataclasses.replace(bad, dataset=dataclasses.replace(
        bad.dataset, path=str(tmp_path / "missing.csv")))
    result = cli.run_matrix(specs, tmp_path / "m")
    assert len(result.reports) == 23 and list(result.failures) == [bad.identifier]
    assert result.exit_status == cli.EXIT_PARTIAL
    assert result.failures[bad.identifier].stage == "load"

    m = tmp_path / "m"
    failures = (m / "failures.tsv").read_text().splitlines()
    assert len(failures) == 2 and failures[1].startswith(f"{bad.identifier}\tload\t")
    plot = (m / "plotdata.tsv").read_text().splitlines()
    assert plot[0] == "dataset\tclassifier\tpca\tn_features\taccuracy" and len(plot) == 24
    assert sorted(p.name for p in m.glob("comparison_*.txt")) == [
        "comparison_j48.txt", "comparison_knn.txt", "comparison_rf.txt", "comparison_svm.txt"]
    assert len(list(m.glob("table_*.txt"))) == 8
    assert len([p for p in m.iterdir() if p.is_dir()]) == 23
    assert not (m / bad.identifier).exists()
    comparison = (m / "comparison_rf.txt").read_text()
    assert all(name in comparison for name in ("CNAE-9", "DBWorld", "Fixture"))


def test_matrix_total_failure(tmp_path, capsys):
    status = cli.main(["matrix", "--dataset", f"cnae9:{tmp_path / 'gone.csv'}",
                       "--classifier", "knn", "--pca", "off", "--out", str(tmp_path / "m")])
    assert status == cli.EXIT_FAILURE
    assert "0 of 1 experiments succeeded" in capsys.readouterr().out


def test_single_spec_matrix_and_workers(tiny, tmp_path, capsys):
    out = tmp_path / "m"
    assert cli.main(["matrix", "--dataset", f"sparse:{tiny}", "--classifier", "knn",
                     "--pca", "off", "--folds", "2", "--workers", "2", "--out", str(out)]) == 0
    comparison = (out / "comparison_knn.txt").read_text().splitlines()
    assert len(comparison) == 4  # title, header, rule, one row
    assert "1 of 1 experiments succeeded" in capsys.readouterr().out


def test_describe(cnae9_file, dbworld_file, tmp_path, capsys):
    assert cli.main(["describe", "--dataset", f"cnae9:{cnae9_file}",
                     "--dataset", f"dbworld:{dbworld_file}"]) == 0
    text = capsys.readouterr().out
    assert "documents: 108" in text and "features: 856" in text and "classes: 9" in text
    assert "documents: 64" in text and "classes: 2" in text
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli.main(["describe", "--dataset", f"text:{empty}"]) == cli.EXIT_FAILURE
    assert "EmptyCorpusError" in capsys.readouterr().err


def test_dump_model_round_trip(text_corpus, tmp_path):
    out = tmp_path / "d"
    assert cli.main(["dump-model", "--dataset", f"text:{text_corpus}", "--classifier", "j48",
                     "--out", str(out)]) == 0
    model = persistence.load_model(out / "model.json")
    assert model.predict(["rocket orbit launch near the planet"]).shape == (1,)
    meta = persistence.json.loads((out / "model.json").read_text())["meta"]
    assert meta["classes"] == ["finance", "medicine", "space"]


def test_atomic_write_leaves_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "report.txt"
    cli.atomic_write(target, "old\n")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(cli.os, "replace", boom)
    with pytest.raises(OSError):
        cli.atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["report.txt"]


def test_stage_error_pickles():
    import pickle
    err = pickle.loads(pickle.dumps(cli.StageError("load", ValueError("x"))))
    assert err.stage == "load" and str(err) == "[stage=load] ValueError: x"
