import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lop.dataset import (
    LabeledDataset,
    ResamplePlan,
    load_csv,
    preprocess,
    round_half_down,
    split_indices,
    stratified_resample,
    write_split_manifest,
)
from lop.exceptions import DataError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_small_csv(tmp_path):
    rows = "\n".join(f"{i},{i * 2},{'a' if i < 4 else 'b'}" for i in range(8))
    ds = load_csv(write(tmp_path / "d.csv", "f1,f2,class\n" + rows + "\n"), "class")
    assert (ds.n, ds.p, ds.n_classes) == (8, 2, 2)
    assert ds.class_names == ("a", "b")
    assert ds.feature_names == ("f1", "f2")


def test_labels_encoded_by_first_appearance(tmp_path):
    ds = load_csv(write(tmp_path / "d.csv", "x,y\n1,z\n2,a\n3,z\n4,m\n"), "y")
    assert ds.labels.tolist() == [1, 2, 1, 3]
    assert ds.class_names == ("z", "a", "m")


def test_olitos_like_group_counts(olitos_like):
    ds = load_csv(olitos_like, "grp")
    assert ds.group_counts.tolist() == [50, 25, 34, 11]
    assert ds.p == 25


def test_non_numeric_cell_is_named(tmp_path):
    path = write(tmp_path / "d.csv", "f1,f2,class\n1,2,a\n3,abc,b\n")
    with pytest.raises(DataError, match=r"'abc'.*line 3.*'f2'"):
        load_csv(path, "class")


@pytest.mark.parametrize("content,label,match", [
    ("f1,class\n", "class", "no data rows"),
    ("f1,class\n1,a\n", "label", "not found"),
])
def test_load_errors(tmp_path, content, label, match):
    with pytest.raises(DataError, match=match):
        load_csv(write(tmp_path / "d.csv", content), label)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "nope.csv", "c")


def test_dataset_invariants():
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((3, 2)), np.array([1, 3, 3]))
    with pytest.raises(DataError):
        LabeledDataset(np.array([[0.0], [np.nan]]), np.array([1, 2]))


def test_preprocess_collapses_duplicates():
    X = np.array([[0.0, 1.0], [2.0, 3.0], [0.0, 1.0], [4.0, 4.0]])
    ds = LabeledDataset(X, np.array([1, 2, 1, 2]))
    out, removed = preprocess(ds)
    assert out.n == 3 and removed.tolist() == [2]
    assert out.row_ids.tolist() == [0, 1, 3]


def test_preprocess_identity_without_duplicates(small_ds):
    out, removed = preprocess(small_ds)
    assert out is small_ds and removed.size == 0


def test_preprocess_conflicting_labels():
    ds = LabeledDataset(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1, 2]))
    with pytest.raises(DataError, match="identical features"):
        preprocess(ds)


def test_round_half_down():
    assert [round_half_down(x) for x in (26.5, 27.2, 8.8, 40.0, 0.5, 1.5)] == [26, 27, 9, 40, 0, 1]


def test_olitos_split_sizes(olitos_like):
    ds = load_csv(olitos_like, "grp")
    plan = ResamplePlan(fraction=0.8, repetitions=3, seed=1)
    counts = plan.train_counts(ds.group_counts)
    assert counts.tolist() == [40, 20, 27, 9]
    train, test = stratified_resample(ds, plan, 1)
    assert train.n == 96 and test.n == 24
    assert train.group_counts.tolist() == [40, 20, 27, 9]


def test_melon_smallest_train_group():
    plan = ResamplePlan(fraction=0.25)
    assert plan.train_counts([490, 106, 499]).tolist() == [122, 26, 125]


def test_split_deterministic_and_partitioning(olitos_like):
    ds = load_csv(olitos_like, "grp")
    plan = ResamplePlan(fraction=0.8, repetitions=5, seed=99)
    for rep in range(1, 6):
        tr1, te1 = split_indices(ds, plan, rep)
        tr2, te2 = split_indices(ds, plan, rep)
        assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)
        assert np.intersect1d(tr1, te1).size == 0
        assert np.array_equal(np.union1d(tr1, te1), np.arange(ds.n))
    assert not np.array_equal(split_indices(ds, plan, 1)[0], split_indices(ds, plan, 2)[0])


def test_plan_validation(small_ds):
    with pytest.raises(DataError):
        ResamplePlan(fraction=0.5, counts=(1, 1))
    with pytest.raises(DataError):
        ResamplePlan(fraction=1.0)
    with pytest.raises(DataError):
        ResamplePlan(fraction=0.5, repetitions=0)
    with pytest.raises(DataError, match="exceed"):
        ResamplePlan(counts=(5, 1)).train_counts(small_ds.group_counts)
    with pytest.raises(DataError, match="empty"):
        ResamplePlan(counts=(4, 2)).train_counts(small_ds.group_counts)
    with pytest.raises(DataError, match="repetition"):
        split_indices(small_ds, ResamplePlan(fraction=0.5), 2)


def test_split_manifest(tmp_path, small_ds):
    plan = ResamplePlan(counts=(2, 3), repetitions=2, seed=3)
    path = tmp_path / "m.csv"
    write_split_manifest(small_ds, plan, path)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 16
    assert sum(r["role"] == "train" for r in rows if r["repetition"] == "1") == 5


@settings(max_examples=40, deadline=None)
@given(
    counts=st.lists(st.integers(2, 30), min_size=2, max_size=5),
    fraction=st.floats(0.05, 0.95),
    seed=st.integers(0, 2**63 - 1),
)
def test_train_counts_constant_across_repetitions(counts, fraction, seed):
    labels = np.repeat(np.arange(1, len(counts) + 1), counts)
    ds = LabeledDataset(np.arange(labels.size, dtype=float)[:, None], labels)
    plan = ResamplePlan(fraction=fraction, repetitions=3, seed=seed)
    try:
        expected = plan.train_counts(ds.group_counts)
    except DataError:
        return
    for rep in (1, 2, 3):
        tr, te = split_indices(ds, plan, rep)
        assert np.bincount(labels[tr], minlength=len(counts) + 1)[1:].tolist() == expected.tolist()
        assert tr.size + te.size == ds.n
