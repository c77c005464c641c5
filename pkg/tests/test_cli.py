import json

import numpy as np
import pytest

from hqnn_dse.cli import main
from hqnn_dse.dataprep import separable_spec, synth_dataset, write_csv
from hqnn_dse.dse import RunRecord
from table_fixtures import dataset1_records, expected_rows


@pytest.fixture(scope="module")
def raw_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("raw")
    t = synth_dataset(separable_spec(24), 400, seed=8, name="d1")
    t.values[::11, 5] = np.nan
    write_csv(t, d / "d1.csv", positive="ckd", negative="notckd")
    (d / "schema.txt").write_text("label = label\npositive = ckd\nnegative = notckd\n")
    return d


@pytest.fixture(scope="module")
def prepped(raw_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("prep")
    assert main(["prep", "--input", str(raw_csv / "d1.csv"), "--schema", str(raw_csv / "schema.txt"),
                 "--out", str(out)]) == 0
    return out


def test_prep_outputs(prepped, raw_csv, tmp_path):
    train = (prepped / "train.csv").read_text().splitlines()
    test = (prepped / "test.csv").read_text().splitlines()
    assert len(train) == 281 and len(test) == 121
    assert train[0] == "pc1,pc2,pc3,pc4,pc5,pc6,pc7,pc8,label"
    assert "policy" in (prepped / "manifest.txt").read_text()
    prov = json.loads((prepped / "provenance.json").read_text())
    assert set(prov["pca_fit_rows"]).isdisjoint(prov["test_rows"])
    # rerun -> byte-identical outputs
    assert main(["prep", "--input", str(raw_csv / "d1.csv"), "--schema", str(raw_csv / "schema.txt"),
                 "--out", str(tmp_path)]) == 0
    for name in ("train.csv", "test.csv", "provenance.json"):
        assert (tmp_path / name).read_bytes() == (prepped / name).read_bytes()


def test_prep_data_errors(raw_csv, tmp_path):
    (tmp_path / "s.txt").write_text("label = diagnosis\n")
    assert main(["prep", "--input", str(raw_csv / "d1.csv"), "--schema", str(tmp_path / "s.txt"),
                 "--out", str(tmp_path)]) == 2
    assert main(["prep", "--input", str(tmp_path / "missing.csv"), "--schema", str(raw_csv / "schema.txt"),
                 "--out", str(tmp_path)]) == 2


def _run_args(prepped, out, *extra):
    return ["run", "--train", str(prepped / "train.csv"), "--test", str(prepped / "test.csv"), "--out", str(out),
            *extra]


def test_run_usage_errors(prepped, tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(_run_args(prepped, tmp_path, "--encoding", "angle", "--arch", "hexagon", "--measure", "pauli-z"))
    assert e.value.code == 1
    assert "Ring" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        main(_run_args(prepped, tmp_path, "--encoding", "angle", "--arch", "ring", "--measure", "z", "--shots", "-3"))
    assert e.value.code == 1


def test_run_off_grid_shots(prepped, tmp_path, capsys):
    code = main(_run_args(prepped, tmp_path, "--encoding", "amplitude", "--arch", "star", "--measure", "pauli-z",
                          "--shots", "75", "--epochs", "1", "--folds", "2"))
    assert code == 0
    captured = capsys.readouterr()
    assert "off the standard grid" in captured.err
    assert "accuracy" in captured.out
    rec = RunRecord.from_json((tmp_path / "record.jsonl").read_text())
    assert rec.config.shots == 75 and len(rec.fold_results) == 2
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "code_version" in manifest and "seeds" in manifest


def test_seed_env_override(prepped, tmp_path, monkeypatch):
    monkeypatch.setenv("HQNN_DSE_SEED", "123")
    args = _run_args(prepped, tmp_path, "--encoding", "amplitude", "--arch", "ring", "--measure", "pauli-x",
                     "--epochs", "1", "--folds", "2")
    assert main(args) == 0
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "base_seed = 123" in manifest and "HQNN_DSE_SEED" in manifest


def test_grid_resume_and_integrity(prepped, tmp_path):
    spec = tmp_path / "grid.ini"
    spec.write_text("[grid]\nencodings = Amplitude\narchitectures = Ring, Star\nmeasurements = PauliZ\n"
                    "shot_levels = 50, 100\n[train]\nepochs = 1\nfolds = 2\n")
    out = tmp_path / "g"
    base = ["grid", "--spec", str(spec), "--train", str(prepped / "train.csv"), "--test", str(prepped / "test.csv"),
            "--out", str(out)]
    assert main(base) == 0
    results = out / "results.jsonl"
    lines = results.read_text().splitlines()
    assert len(lines) == 4
    assert main(base) == 1  # refuses to overwrite without --resume
    results.write_text("\n".join(lines[:2]) + "\n")
    assert main(base + ["--resume"]) == 0
    assert len(results.read_text().splitlines()) == 4
    results.write_text(lines[0] + "\n{broken\n")
    assert main(base + ["--resume"]) == 3


def test_aggregate_views(tmp_path):
    results = tmp_path / "results.jsonl"
    results.write_text("".join(r.to_json() + "\n" for r in dataset1_records()))
    out = tmp_path / "agg"
    assert main(["aggregate", "--results", str(results), "--view", "overlap", "--out", str(out)]) == 0
    rows = (out / "overlap_top5.csv").read_text().splitlines()[1:]
    assert [int(r.split(",")[2]) for r in rows] == [7, 6, 6, 4]
    assert [r.split(",")[3:] for r in rows] == [cells for _, _, cells in expected_rows()]
    assert main(["aggregate", "--results", str(results), "--view", "factor-means", "--out", str(out)]) == 0
    assert (out / "manifest.txt").exists()
    with pytest.raises(SystemExit) as e:
        main(["aggregate", "--results", str(results), "--view", "heatmap", "--out", str(out)])
    assert e.value.code == 1
    results.write_text("garbage\n")
    assert main(["aggregate", "--results", str(results), "--view", "overlap", "--out", str(out)]) == 3


def test_aggregate_curves_one_file_per_config_and_kind(prepped, tmp_path):
    out = tmp_path / "run"
    assert main(_run_args(prepped, out, "--encoding", "amplitude", "--arch", "ring", "--measure", "hadamard",
                          "--epochs", "1", "--folds", "2")) == 0
    agg = tmp_path / "agg"
    assert main(["aggregate", "--results", str(out / "record.jsonl"), "--view", "curves", "--out", str(agg)]) == 0
    assert len(list((agg / "curves").glob("*.csv"))) == 3
    assert (agg / "panel_g_specificity_vs_sensitivity.csv").exists()
    assert (agg / "panel_h_mcc_vs_f1.csv").exists()


def test_tsne_command(raw_csv, tmp_path):
    src = raw_csv / "d1.csv"
    small = tmp_path / "a.csv"
    small.write_text("\n".join(src.read_text().splitlines()[:41]) + "\n")
    copy = tmp_path / "b.csv"
    copy.write_bytes(small.read_bytes())
    out = tmp_path / "t"
    code = main(["tsne", str(small), str(copy), "--schema", str(raw_csv / "schema.txt"), "--iterations", "250",
                 "--out", str(out)])
    assert code == 0
    d = np.loadtxt(out / "distances.csv", delimiter=",", skiprows=1, usecols=(1, 2))
    np.testing.assert_allclose(d, d.T)
    assert d[0, 0] == 0 and d[0, 1] < 1e-6
    assert len((out / "embedding.csv").read_text().splitlines()) == 81
    tiny = tmp_path / "c.csv"
    tiny.write_text("\n".join(src.read_text().splitlines()[:3]) + "\n")
    assert main(["tsne", str(small), str(tiny), "--schema", str(raw_csv / "schema.txt"), "--out", str(out)]) == 2
