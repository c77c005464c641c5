import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.linear_model import LogisticRegression

from hqnn_dse.dataprep import (
    DesignMatrix,
    ImputePolicy,
    MinMaxScaler,
    RawTable,
    Schema,
    fit_touched_test_rows,
    impute,
    ingest_csv,
    pca_fit,
    preprocess,
    separable_spec,
    split_70_30,
    synth_dataset,
    write_csv,
)
from hqnn_dse.errors import DataError, ImputationError, IngestionError


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.fixture
def ckd_like(tmp_path):
    csv_text = (
        "id,age,bp,rbc,class\n"
        "1,48,80,normal,ckd\n"
        "2,7,50,?,ckd\n"
        "3,62,?,abnormal,notckd\n"
        "4,51,70,normal,notckd\n"
    )
    schema = "label = class\npositive = ckd\nnegative = notckd\ndrop = id\nmap.normal = 0\nmap.abnormal = 1\n"
    return _write(tmp_path, "d.csv", csv_text), Schema.load(_write(tmp_path, "s.txt", schema))


def test_ingest(ckd_like):
    path, schema = ckd_like
    t = ingest_csv(path, schema)
    assert t.columns == ["age", "bp", "rbc"]
    assert t.labels.tolist() == [1, 1, 0, 0]
    assert np.isnan(t.values[1, 2]) and np.isnan(t.values[2, 1])
    assert t.values[2, 2] == 1.0


def test_ingest_errors_are_located(tmp_path, ckd_like):
    _, schema = ckd_like
    bad = _write(tmp_path, "b.csv", "id,age,bp,rbc,class\n1,48,80,normal,ckd\n2,x,50,normal,ckd\n")
    with pytest.raises(IngestionError, match=r"row 3.*'age'"):
        ingest_csv(bad, schema)
    nolabel = _write(tmp_path, "n.csv", "id,age,bp,rbc\n1,48,80,normal\n")
    with pytest.raises(IngestionError, match="label column"):
        ingest_csv(nolabel, schema)
    badlabel = _write(tmp_path, "l.csv", "id,age,bp,rbc,class\n1,48,80,normal,maybe\n")
    with pytest.raises(IngestionError, match="row 2"):
        ingest_csv(badlabel, schema)


def test_impute_mean_and_binary_median():
    v = np.array([[1.0, 0.0], [np.nan, 1.0], [3.0, np.nan], [5.0, 1.0], [2.0, 0.0]])
    t = RawTable(["a", "b"], v, np.array([0, 1, 0, 1, 0]))
    out = impute(t, ImputePolicy.MEAN_MEDIAN)
    assert out.values[1, 0] == pytest.approx(11 / 4)
    assert out.values[2, 1] in (0.0, 1.0)
    assert out.values[2, 1] == 0.0  # lower median of {0, 1, 1, 0}
    assert np.isnan(impute(t, ImputePolicy.LEAVE_EMPTY).values[1, 0])


def test_impute_uses_fit_rows_only():
    v = np.array([[0.0], [2.0], [np.nan], [100.0]])
    t = RawTable(["a"], v, np.array([0, 1, 0, 1]))
    assert impute(t, "MeanMedian", fit_rows=[0, 1, 2]).values[2, 0] == 1.0
    with pytest.raises(ImputationError):
        impute(RawTable(["a"], np.array([[np.nan], [np.nan]]), np.array([0, 1])))


def _with_covariance(cov, n=50, seed=0):
    z = np.random.default_rng(seed).normal(size=(n, len(cov)))
    z -= z.mean(axis=0)
    z = z @ np.linalg.inv(np.linalg.cholesky(np.cov(z, rowvar=False))).T
    return z @ np.linalg.cholesky(cov).T + 5.0


def test_pca_hand_eigenvalues():
    pca = pca_fit(_with_covariance(np.array([[2.0, 1.0], [1.0, 2.0]])), k=2)
    np.testing.assert_allclose(pca.eigenvalues, [3.0, 1.0], atol=1e-10)
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(pca.components, [[s, s], [s, -s]], atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_pca_outputs_uncorrelated_and_signed(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(60, 12)) @ rng.normal(size=(12, 12))
    pca = pca_fit(x, 8)
    z = pca.transform(x)
    c = np.cov(z, rowvar=False)
    off = c - np.diag(np.diag(c))
    assert np.max(np.abs(off)) < 1e-8 * np.max(np.abs(c))
    assert np.all(np.diff(pca.eigenvalues) <= 1e-12)
    for comp in pca.components:
        assert comp[np.argmax(np.abs(comp))] > 0


def test_pca_pads_low_rank():
    x = np.random.default_rng(0).normal(size=(20, 3))
    x = np.hstack([x, x])  # rank 3
    with pytest.warns(UserWarning, match="padding"):
        pca = pca_fit(x, 8)
    assert pca.transform(x).shape == (20, 8)
    np.testing.assert_array_equal(pca.components[3:], 0)


@given(arrays(np.float64, (10, 3), elements=st.floats(-1e3, 1e3)))
def test_minmax_roundtrip(x):
    s = MinMaxScaler.fit(x)
    z = s.transform(x)
    assert np.all((z >= 0) & (z <= 1))
    live = s.maximum > s.minimum
    np.testing.assert_allclose(s.inverse_transform(z)[:, live], x[:, live], atol=1e-12 * max(1.0, np.abs(x).max()))


def test_split_sizes_and_balance():
    y = np.array([1] * 250 + [0] * 150)
    tr, te = split_70_30(y)
    assert (tr.size, te.size) == (280, 120)
    assert set(tr).isdisjoint(te)
    assert int(y[te].sum()) == 75
    tr2, te2 = split_70_30(y)
    np.testing.assert_array_equal(te, te2)


def test_synth_balance_and_determinism():
    spec = separable_spec(24)
    a = synth_dataset(spec, 400, seed=1)
    assert (int(a.labels.sum()), int((a.labels == 0).sum())) == (250, 150)
    b = synth_dataset(spec, 400, seed=1)
    np.testing.assert_array_equal(a.values, b.values)
    tr, te = split_70_30(a.labels)
    clf = LogisticRegression(max_iter=1000).fit(a.values[tr], a.labels[tr])
    assert clf.score(a.values[te], a.labels[te]) >= 0.95


def test_preprocess_shapes_and_provenance():
    t = synth_dataset(separable_spec(24), 400, seed=2)
    t.values[::7, 3] = np.nan
    for policy in ImputePolicy:
        train, test = preprocess(t, policy)
        assert train.features.shape == (280, 8) and test.features.shape == (120, 8)
        assert train.features.min() >= 0 and train.features.max() <= 1
        assert test.features.min() >= 0 and test.features.max() <= 1
        assert fit_touched_test_rows(train.provenance) == set()
        assert train.provenance["order"] == ["split", "impute", "pca", "minmax"]


def test_leak_detector_sees_leaks():
    prov = {"test_rows": [5, 6], "impute_fit_rows": [1], "pca_fit_rows": [1, 6], "scaler_fit_rows": []}
    assert fit_touched_test_rows(prov) == {6}


def test_design_matrix_roundtrip(tmp_path):
    t = synth_dataset(separable_spec(24), 40, seed=3)
    train, _ = preprocess(t)
    train.save_csv(tmp_path / "m.csv")
    back = DesignMatrix.load_csv(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.features, train.features)
    np.testing.assert_array_equal(back.labels, train.labels)
    with pytest.raises(DataError):
        DesignMatrix(np.zeros((3, 2)), np.zeros(2))


def test_write_csv_reingests(tmp_path):
    t = synth_dataset(separable_spec(5), 20, seed=4)
    t.values[0, 0] = np.nan
    write_csv(t, tmp_path / "x.csv", positive="ckd", negative="notckd")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = ingest_csv(tmp_path / "x.csv", Schema("label", "ckd", "notckd"))
    np.testing.assert_array_equal(back.labels, t.labels)
    np.testing.assert_allclose(back.values, t.values, equal_nan=True)
