import csv
import json

import numpy as np
import pytest

from melanfis import anfis
from melanfis.cli import main, parse_int_list
from melanfis.features import CSV_HEADER, FeatureVector, read_feature_csv, write_feature_csv
from melanfis.synthetic import benign_image, generate_dataset, melanoma_image

FAST = {
    "image_size": 128,
    "n_rules": 3,
    "ica": {"population": 20, "n_empires": 2, "iterations": 10},
    "aco": {"n_ants": 10, "archive_size": 20, "iterations": 10},
    "gd": {"iterations": 10},
}


@pytest.fixture(scope="module")
def fast_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "fast.json"
    p.write_text(json.dumps(FAST))
    return str(p)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    manifest = generate_dataset(root, n_benign=8, n_melanoma=8, size=96, seed=1)
    return root, manifest


@pytest.fixture(scope="module")
def features(tmp_path_factory, dataset, fast_config):
    out = tmp_path_factory.mktemp("feat")
    assert main(["extract", str(dataset[1]), "--config", fast_config, "--out", str(out)]) == 0
    return out / "features.csv"


def random_feature_csv(path, n, seed=0):
    rng = np.random.default_rng(seed)
    vs = []
    for i in range(n):
        label = 1 + i % 2
        vs.append(FeatureVector(rng.normal(size=13) + (label - 1) * 2.0, label))
    return write_feature_csv(path, vs)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(path, entries):
    path.write_text("path,label\n" + "".join(f"{p},{lab}\n" for p, lab in entries))
    return path


def test_parse_int_list():
    assert parse_int_list("0-3,7") == [0, 1, 2, 3, 7]
    assert parse_int_list("5") == [5]
    with pytest.raises(ValueError):
        parse_int_list("3-1")


# ------------------------------------------------------------------- extract

def test_extract_two_images(tmp_path, fast_config):
    rng = np.random.default_rng(0)
    from melanfis.imaging import save_image
    save_image(benign_image(rng, 96), tmp_path / "a.png")
    save_image(melanoma_image(rng, 96), tmp_path / "b.png")
    m = write_manifest(tmp_path / "m.csv", [("a.png", 1), ("b.png", 2)])
    assert main(["extract", str(m), "--config", fast_config, "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "features.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 3
    assert [v.label for v in read_feature_csv(tmp_path / "o" / "features.csv")] == [1, 2]


def test_extract_partial_failure(tmp_path, dataset, fast_config):
    root, _ = dataset
    imgs = sorted((root / "images").glob("*.png"))[:2]
    (tmp_path / "cut.ppm").write_bytes(b"P6\n50 50\n255\n" + bytes(100))
    m = write_manifest(tmp_path / "m.csv", [(imgs[0], 1), ("cut.ppm", 2), (imgs[1], 2)])
    assert main(["extract", str(m), "--config", fast_config, "--out", str(tmp_path / "o")]) == 0
    assert len(read_feature_csv(tmp_path / "o" / "features.csv")) == 2
    errs = rows(tmp_path / "o" / "errors.csv")
    assert len(errs) == 1 and errs[0]["path"] == "cut.ppm" and errs[0]["error"]


def test_extract_all_fail_exits_nonzero(tmp_path, fast_config, capsys):
    (tmp_path / "x.png").write_bytes(b"nope")
    m = write_manifest(tmp_path / "m.csv", [("x.png", 1)])
    assert main(["extract", str(m), "--config", fast_config, "--out", str(tmp_path / "o")]) != 0
    assert not (tmp_path / "o" / "features.csv").exists()
    assert "failed" in capsys.readouterr().err


def test_extract_bad_manifest(tmp_path, capsys):
    assert main(["extract", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1
    m = write_manifest(tmp_path / "m.csv", [("a.png", 3)])
    assert main(["extract", str(m), "--out", str(tmp_path)]) == 1
    assert "label 3" in capsys.readouterr().err


def test_extract_rerun_byte_identical(tmp_path, dataset, features, fast_config):
    assert main(["extract", str(dataset[1]), "--config", fast_config, "--out", str(tmp_path), "--jobs", "2"]) == 0
    assert (tmp_path / "features.csv").read_bytes() == features.read_bytes()


def test_extract_does_not_touch_inputs(tmp_path, dataset, fast_config):
    root, manifest = dataset
    before = {p: p.stat().st_mtime_ns for p in root.rglob("*")}
    main(["extract", str(manifest), "--config", fast_config, "--out", str(tmp_path / "o")])
    assert {p: p.stat().st_mtime_ns for p in root.rglob("*")} == before


# --------------------------------------------------------------------- train

@pytest.mark.parametrize("optimizer", ["ica", "gd", "aco"])
def test_train_writes_valid_model(tmp_path, features, fast_config, optimizer):
    out = tmp_path / optimizer
    assert main(["train", str(features), "--config", fast_config, "--optimizer", optimizer,
                 "--out", str(out)]) == 0
    model, st, doc = anfis.load_model(out / "model.json")
    assert model.n_inputs == 13 and st is not None
    assert doc["training"]["method"] == f"{optimizer}_anfis"
    hist = rows(out / "convergence.csv")
    assert [int(r["iteration"]) for r in hist] == list(range(len(hist)))
    assert len(rows(out / "train_report.csv")) == 2


def test_reload_reproduces_test_metrics(tmp_path, features, fast_config):
    assert main(["train", str(features), "--config", fast_config, "--seed", "5", "--out", str(tmp_path / "t")]) == 0
    assert main(["evaluate", str(features), "--model", str(tmp_path / "t" / "model.json"),
                 "--out", str(tmp_path / "e")]) == 0
    keys = ("seed", "split", "accuracy", "sensitivity", "specificity", "tp", "fn", "tn", "fp")
    trained = [{k: r[k] for k in keys} for r in rows(tmp_path / "t" / "train_report.csv")]
    scored = [{k: r[k] for k in keys} for r in rows(tmp_path / "e" / "report.csv")]
    assert trained == scored


def test_train_rerun_byte_identical(tmp_path, features, fast_config):
    for d in ("a", "b"):
        assert main(["train", str(features), "--config", fast_config, "--out", str(tmp_path / d)]) == 0
    for name in ("model.json", "convergence.csv", "train_report.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_train_malformed_row(tmp_path, features, capsys):
    lines = features.read_text().splitlines()
    lines[3] = lines[3].replace(",", ",x", 1)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["train", str(bad), "--out", str(tmp_path)]) == 1
    assert "row 4" in capsys.readouterr().err


def test_train_single_class_rejected(tmp_path, capsys):
    p = tmp_path / "one.csv"
    write_feature_csv(p, [FeatureVector(np.ones(13), 1), FeatureVector(np.zeros(13), 1)])
    assert main(["train", str(p), "--out", str(tmp_path)]) == 1
    assert "each class" in capsys.readouterr().err


# ------------------------------------------------------------------ evaluate

def test_evaluate_dimension_mismatch(tmp_path, features, capsys):
    m = anfis.AnfisModel(np.zeros((2, 5)), np.ones((2, 5)), np.zeros((2, 6)))
    anfis.save_model(tmp_path / "m.json", m, feature_order=[f"f{i}" for i in range(5)])
    assert main(["evaluate", str(features), "--model", str(tmp_path / "m.json"), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "5" in err and "13" in err


def test_evaluate_three_methods_ten_seeds(tmp_path, fast_config, capsys):
    feats = random_feature_csv(tmp_path / "f.csv", 40)
    out = tmp_path / "e"
    assert main(["evaluate", str(feats), "--config", fast_config, "--seeds", "1-10", "--out", str(out)]) == 0
    report = rows(out / "report.csv")
    assert len({(r["method"], r["seed"]) for r in report}) == 30
    assert len(report) == 60
    summary = (out / "summary.txt").read_text()
    assert summary == capsys.readouterr().out
    table_rows = [ln for ln in summary.splitlines() if ln.split() and ln.split()[0].endswith("_anfis")]
    assert len(table_rows) == 6
    assert all(len(ln.split()) == 3 for ln in table_rows)
    for name in ("accuracy.svg", "sensitivity.svg"):
        assert (out / name).read_text().lstrip().startswith("<?xml")


def test_evaluate_rerun_byte_identical(tmp_path, fast_config):
    feats = random_feature_csv(tmp_path / "f.csv", 30, seed=2)
    for d in ("a", "b"):
        assert main(["evaluate", str(feats), "--config", fast_config, "--seed", "3", "--out", str(tmp_path / d)]) == 0
    for name in ("report.csv", "summary.txt", "accuracy.svg", "sensitivity.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_evaluate_subset_of_methods(tmp_path, fast_config):
    feats = random_feature_csv(tmp_path / "f.csv", 30)
    assert main(["evaluate", str(feats), "--config", fast_config, "--methods", "gd,aco",
                 "--out", str(tmp_path / "e")]) == 0
    assert {r["method"] for r in rows(tmp_path / "e" / "report.csv")} == {"gd_anfis", "aco_anfis"}


def test_timing_flag(tmp_path, fast_config):
    feats = random_feature_csv(tmp_path / "f.csv", 30)
    assert main(["evaluate", str(feats), "--config", fast_config, "--methods", "gd", "--timing",
                 "--out", str(tmp_path / "e")]) == 0
    assert all(float(r["wall_seconds"]) > 0 for r in rows(tmp_path / "e" / "report.csv"))
    assert rows(tmp_path / "e" / "timings.csv")


# --------------------------------------------------------------- convergence

def test_convergence_default_grid(tmp_path, fast_config):
    feats = random_feature_csv(tmp_path / "f.csv", 400)
    out = tmp_path / "c"
    assert main(["convergence", str(feats), "--config", fast_config, "--methods", "gd", "--out", str(out)]) == 0
    grid = rows(out / "convergence_grid.csv")
    assert len(grid) == 15
    assert {(int(r["subset_size"]), int(r["iterations"])) for r in grid} == {
        (s, i) for s in (50, 100, 200, 300, 400) for i in (50, 100, 200)}
    assert len(list(out.glob("*.svg"))) == 6


def test_convergence_single_cell_rerun_identical(tmp_path, fast_config):
    feats = random_feature_csv(tmp_path / "f.csv", 60)
    for d in ("a", "b"):
        assert main(["convergence", str(feats), "--config", fast_config, "--sizes", "50", "--iterations", "5",
                     "--out", str(tmp_path / d)]) == 0
    grid = (tmp_path / "a" / "convergence_grid.csv").read_bytes()
    assert len(grid.decode().splitlines()) == 2
    assert grid == (tmp_path / "b" / "convergence_grid.csv").read_bytes()


def test_convergence_oversized_subset(tmp_path, capsys):
    feats = random_feature_csv(tmp_path / "f.csv", 20)
    assert main(["convergence", str(feats), "--sizes", "50", "--out", str(tmp_path)]) == 1
    assert "exceeds" in capsys.readouterr().err


# ------------------------------------------------------------ demo-synthetic

def test_demo_synthetic(tmp_path):
    assert main(["demo-synthetic", "--n-benign", "3", "--n-melanoma", "2", "--size", "64", "--out", str(tmp_path)]) == 0
    entries = rows(tmp_path / "manifest.csv")
    assert [int(e["label"]) for e in entries] == [1, 2, 1, 2, 1]
    assert all((tmp_path / e["path"]).is_file() for e in entries)


def test_bad_config_file(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    feats = random_feature_csv(tmp_path / "f.csv", 10)
    assert main(["train", str(feats), "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "config" in capsys.readouterr().err
