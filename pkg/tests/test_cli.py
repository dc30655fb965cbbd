import json

import numpy as np
import pytest

from tanimoto.cli import main
from tanimoto.gram import read_gram_binary, read_gram_csv


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def features_file(tmp_path, X, name="x.csv", ids=None):
    X = np.asarray(X)
    ids = ids or [f"m{i}" for i in range(len(X))]
    header = ["id"] + [f"f{j + 1}" for j in range(X.shape[1])]
    return write_csv(tmp_path / name, header, [[i, *map(repr, map(float, r))] for i, r in zip(ids, X)])


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# -- kernel --------------------------------------------------------------------


@pytest.mark.parametrize("impl", ["l1", "minmax", "fg"])
def test_kernel_literals(capsys, impl):
    code, out, _ = run(capsys, "kernel", "--impl", impl, "1,-1", "2,-3")
    assert code == 0
    assert float(out) == pytest.approx(0.4, abs=1e-15)


def test_kernel_prints_17_digits(capsys):
    _, out, _ = run(capsys, "kernel", "1,0,1", "1,1,1")
    assert out.strip() == format(2 / 3, ".17g")


def test_kernel_self(capsys):
    code, out, _ = run(capsys, "kernel", "--impl", "fg", "3.5,-2,0.25", "3.5,-2,0.25")
    assert code == 0 and float(out) == 1.0


def test_kernel_smooth(capsys):
    code, out, _ = run(capsys, "kernel", "--smooth-t", "0.001", "1,-1", "2,-3")
    assert code == 0
    assert abs(float(out) - 0.4) <= 0.01


def test_kernel_ids_and_weights(capsys, tmp_path):
    f = features_file(tmp_path, [[1, 0, 2], [2, 1, 0]])
    w = write_csv(tmp_path / "w.csv", ["index", "weight"], [[1, 1], [2, 0], [3, 1]])
    code, out, _ = run(capsys, "kernel", "--features", f, "--weights", w, "m0", "m1")
    assert code == 0
    assert float(out) == pytest.approx(1 / 4)


def test_kernel_composed(capsys, tmp_path):
    f = features_file(tmp_path, [[1.0], [2.0]])
    code, out, _ = run(capsys, "kernel", "--base-kernel", "linear", "--features", f, "3", "6")
    assert code == 0 and float(out) == 0.5
    code, _, err = run(capsys, "kernel", "--base-kernel", "linear", "3", "6")
    assert code == 1 and "--features" in err


def test_kernel_errors(capsys, tmp_path):
    code, _, err = run(capsys, "kernel", "1,x", "1,2")
    assert code == 2 and "vector literal" in err
    f = features_file(tmp_path, [[1, 0]])
    code, _, err = run(capsys, "kernel", "--features", f, "m0", "nope")
    assert code == 2 and "unknown id" in err
    code, _, err = run(capsys, "kernel", "1,2", "1,2,3")
    assert code == 2 and "length" in err


def test_kernel_representation(capsys):
    _, out, _ = run(capsys, "kernel", "--kernel", "binary", "--representation", "binary", "2.5,0,1", "1,3,0")
    assert float(out) == pytest.approx(1 / 3)


def test_usage_errors(capsys):
    assert run(capsys, "kernel", "1")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "kernel", "--impl", "qr", "1", "1")[0] == 1
    assert run(capsys)[0] == 1


def test_numerical_exit_code(capsys):
    code, _, err = run(capsys, "kernel", "--smooth-t", "0.01", "--smooth-mode", "literal", "1,-1", "2,-3")
    assert code == 3 and "numerical" in err


# -- gram ----------------------------------------------------------------------


def test_gram_toy(capsys, tmp_path):
    f = features_file(tmp_path, [[1, 0], [0, 1], [1, 1]])
    out = tmp_path / "out" / "g"
    code, stdout, _ = run(capsys, "gram", "--kernel", "binary", f, "-o", out, "--check-psd")
    assert code == 0
    report = json.loads(stdout)["psd"]
    assert report["pass"] and report["min_eigenvalue"] > 0
    ids, K = read_gram_csv(tmp_path / "out" / "g.csv")
    assert ids == ("m0", "m1", "m2")
    assert K.tolist() == [[1, 0, 0.5], [0, 1, 0.5], [0.5, 0.5, 1]]
    Kb, side = read_gram_binary(out)
    assert np.array_equal(Kb, K)
    assert side["spec"]["kind"] == "binary" and side["psd"]["pass"]


def test_gram_single_row(capsys, tmp_path):
    f = features_file(tmp_path, [[0.5, -2.0]])
    assert run(capsys, "gram", f, "-o", tmp_path / "g")[0] == 0
    assert read_gram_csv(tmp_path / "g.csv")[1].tolist() == [[1.0]]


def test_gram_nan_cell(capsys, tmp_path):
    f = write_csv(tmp_path / "x.csv", ["id", "f1", "f2"], [["a", 1, 2], ["b", "nan", 0]])
    code, _, err = run(capsys, "gram", f, "-o", tmp_path / "g")
    assert code == 2
    assert "row 3" in err and "f1" in err


def test_gram_schema_errors(capsys, tmp_path):
    f = write_csv(tmp_path / "x.csv", ["id", "f1", "f2"], [["a", 1, 2], ["b", 1]])
    code, _, err = run(capsys, "gram", f, "-o", tmp_path / "g")
    assert code == 2 and "row 3" in err
    code, _, err = run(capsys, "gram", tmp_path / "missing.csv", "-o", tmp_path / "g")
    assert code == 1
    f = features_file(tmp_path, [[1, -1]], name="neg.csv")
    code, _, err = run(capsys, "gram", "--kernel", "minmax", f, "-o", tmp_path / "g")
    assert code == 2 and "nonnegative" in err


def test_gram_workers_env_and_flag(capsys, tmp_path, monkeypatch, rng):
    f = features_file(tmp_path, rng.uniform(-1, 1, (17, 5)))
    run(capsys, "gram", f, "-o", tmp_path / "a", "--workers", "1")
    monkeypatch.setenv("TANIMOTO_WORKERS", "3")
    run(capsys, "gram", f, "-o", tmp_path / "b")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# smoothing\nsmooth-t = 0.5\nimpl = l1\n", encoding="utf-8")
    _, from_cfg, _ = run(capsys, "kernel", "--config", cfg, "1,-1", "2,-3")
    _, explicit, _ = run(capsys, "kernel", "--smooth-t", "0.5", "1,-1", "2,-3")
    assert from_cfg == explicit
    _, overridden, _ = run(capsys, "kernel", "--config", cfg, "--smooth-t", "0.001", "1,-1", "2,-3")
    assert abs(float(overridden) - 0.4) <= 0.01
    bad = tmp_path / "bad.cfg"
    bad.write_text("no-such-flag = 1\n", encoding="utf-8")
    code, _, err = run(capsys, "kernel", "--config", bad, "1", "1")
    assert code == 1 and "no_such_flag" in err


# -- krr-cv --------------------------------------------------------------------


def synthetic_files(tmp_path, rng, m=60, n=8):
    from tanimoto.core import minmax_kernel

    X = rng.uniform(0, 1, (m, n))
    ref = rng.uniform(0, 1, n)
    y = [10 * minmax_kernel(x, ref) + rng.normal(0, 0.01) for x in X]
    ids = [f"s{i}" for i in range(m)]
    f = features_file(tmp_path, X, ids=ids)
    t = write_csv(tmp_path / "y.csv", ["id", "target"], [[i, repr(v)] for i, v in zip(ids, y)])
    return f, t


def test_krr_cv(capsys, tmp_path, rng):
    f, t = synthetic_files(tmp_path, rng)
    out = tmp_path / "report.json"
    code, stdout, _ = run(capsys, "krr-cv", "--kernel", "minmax", f, t, "-o", out, "--seed", "5")
    assert code == 0
    report = json.loads(out.read_text())
    assert report["config"]["seed"] == 5
    assert len(report["folds"]) == 15
    assert report["pooled_aggregate"]["r2"]["mean"] >= 0.95
    assert (tmp_path / "report.txt").read_text().strip() == stdout.strip()
    assert "KRR + Real" in stdout
    # same seed, same report
    run(capsys, "krr-cv", "--kernel", "minmax", f, t, "-o", tmp_path / "again.json", "--seed", "5")
    assert (tmp_path / "again.json").read_text() == out.read_text()


def test_krr_cv_id_mismatch(capsys, tmp_path, rng):
    f, _ = synthetic_files(tmp_path, rng, m=10)
    t = write_csv(tmp_path / "t.csv", ["id", "target"], [["s0", 1.0], ["zz", 2.0]])
    code, _, err = run(capsys, "krr-cv", f, t, "-o", tmp_path / "r.json")
    assert code == 2 and "not in the feature file" in err


def test_krr_cv_too_small(capsys, tmp_path, rng):
    f, _ = synthetic_files(tmp_path, rng, m=10)
    t = write_csv(tmp_path / "t.csv", ["id", "target"], [["s0", 1.0], ["s1", 2.0]])
    assert run(capsys, "krr-cv", f, t, "-o", tmp_path / "r.json")[0] == 2


def test_krr_cv_representation_label(capsys, tmp_path, rng):
    f, t = synthetic_files(tmp_path, rng, m=30)
    code, stdout, _ = run(
        capsys, "krr-cv", "--kernel", "binary", "--representation", "binary", "--repeats", "1",
        "--lambda-grid", "0.01,1", f, t, "-o", tmp_path / "r.json",
    )
    assert code == 0 and "KRR + Binary" in stdout
    assert json.loads((tmp_path / "r.json").read_text())["representation"] == "binary"


# -- features ------------------------------------------------------------------


def test_features_example(capsys, tmp_path):
    f = features_file(tmp_path, [[1, 0], [0, 0]])
    out = tmp_path / "phi.csv"
    assert run(capsys, "features", f, "--depth", "1", "-o", out)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "id,b1_0,b1_1"
    assert lines[1] == "m0,0.7071067811865475,0.0"
    assert lines[2] == "m1,0.0,0.0"


def test_features_default_depth(capsys, tmp_path):
    # no pair leaves a coordinate outside its union, so one block is exact
    f = features_file(tmp_path, [[1], [0]])
    out = tmp_path / "phi.csv"
    assert run(capsys, "features", f, "-o", out)[0] == 0
    assert out.read_text().splitlines() == ["id,b1_0", "m0,1.0", "m1,0.0"]
    # (1,0) with itself leaves half outside: 0.5**30 <= 1e-9 picks depth 30
    f = features_file(tmp_path, [[1, 0]], name="half.csv")
    code, _, err = run(capsys, "features", f, "-o", out)
    assert code == 1 and "depth 30" in err


def test_features_budget(capsys, tmp_path):
    f = features_file(tmp_path, [[1, 0, 1, 0]])
    code, _, err = run(capsys, "features", f, "--depth", "12", "-o", tmp_path / "p.csv")
    assert code == 1
    assert "22369620 entries per row" in err


def test_features_non_binary(capsys, tmp_path):
    f = features_file(tmp_path, [[1, 0.5]])
    code, _, err = run(capsys, "features", f, "-o", tmp_path / "p.csv")
    assert code == 2 and "binary" in err
    assert run(capsys, "features", "--representation", "binary", f, "-o", tmp_path / "p.csv")[0] == 0
