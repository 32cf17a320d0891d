"""Dataset loading, filtering, splitting, and bootstrap behaviour."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from petforest.dataset import (
    Dataset,
    filter_classes,
    holdout_split,
    load_csv,
    load_features_csv,
    stratified_bootstrap,
)
from petforest.errors import DataError
from petforest.seeding import rng_from

from conftest import make_tiny


# ---------------------------------------------------------------------------
# Dataset construction


def test_dataset_validation_rejects_bad_shapes():
    with pytest.raises(DataError):
        Dataset(np.zeros((3,)), np.zeros(3, dtype=np.int64), 2)
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), np.zeros(4, dtype=np.int64), 2)
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), np.array([0, 1, 2]), 2)  # label out of range
    with pytest.raises(DataError):
        Dataset(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), 2)


def test_dataset_arrays_are_frozen():
    d = make_tiny()
    with pytest.raises(ValueError):
        d.features[0, 0] = 99.0
    with pytest.raises(ValueError):
        d.labels[0] = 1


def test_class_counts_and_priors():
    d = Dataset(np.zeros((6, 1)), np.array([0, 0, 0, 1, 1, 2]), 3)
    assert d.class_counts().tolist() == [3, 2, 1]
    assert np.allclose(d.priors(), [0.5, 1 / 3, 1 / 6])


def test_digest_is_content_addressed():
    a = make_tiny(seed=5)
    b = make_tiny(seed=5)
    c = make_tiny(seed=6)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()


# ---------------------------------------------------------------------------
# CSV loading


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_with_header_and_named_label(tmp_path):
    p = _write(tmp_path, "d.csv", "a,b,y\n1.0,2.0,yes\n3.0,4.0,no\n5.0,6.0,yes\n")
    d = load_csv(p, label_column="y")
    assert d.feature_names == ("a", "b")
    # Classes indexed by first appearance: yes -> 0, no -> 1.
    assert d.class_names == ("yes", "no")
    assert d.labels.tolist() == [0, 1, 0]
    assert d.features[1].tolist() == [3.0, 4.0]


def test_load_csv_headerless_numeric_with_index_label(tmp_path):
    p = _write(tmp_path, "d.csv", "1,2,0\n3,4,1\n5,6,0\n")
    d = load_csv(p, label_column=2)
    assert d.num_examples == 3
    assert d.class_names == ("0", "1")


def test_load_csv_label_index_out_of_range(tmp_path):
    p = _write(tmp_path, "d.csv", "1,2,0\n3,4,1\n")
    with pytest.raises(DataError, match="out of range"):
        load_csv(p, label_column=-1)
    with pytest.raises(DataError, match="out of range"):
        load_csv(p, label_column=3)


def test_load_csv_error_reports_location(tmp_path):
    p = _write(tmp_path, "d.csv", "a,b,y\n1.0,oops,yes\n2.0,3.0,no\n")
    with pytest.raises(DataError, match=r"line 2.*column 2"):
        load_csv(p, label_column="y")


def test_load_csv_ragged_row(tmp_path):
    p = _write(tmp_path, "d.csv", "a,b,y\n1.0,2.0,yes\n1.0,no\n")
    with pytest.raises(DataError, match="line 3"):
        load_csv(p, label_column="y")


def test_load_csv_unknown_label_column(tmp_path):
    p = _write(tmp_path, "d.csv", "a,b,y\n1,2,x\n3,4,z\n")
    with pytest.raises(DataError, match="no column named"):
        load_csv(p, label_column="nope")


def test_load_csv_single_class_rejected(tmp_path):
    p = _write(tmp_path, "d.csv", "a,y\n1,pos\n2,pos\n")
    with pytest.raises(DataError, match="at least two"):
        load_csv(p, label_column="y")


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "absent.csv", label_column=0)


def test_load_features_csv(tmp_path):
    p = _write(tmp_path, "m.csv", "a,b\n1,2\n3,4\n")
    x, names = load_features_csv(p)
    assert x.shape == (2, 2)
    assert names == ("a", "b")
    p2 = _write(tmp_path, "m2.csv", "1,2\n3,bad\n")
    with pytest.raises(DataError, match="line 2"):
        load_features_csv(p2)


# ---------------------------------------------------------------------------
# Class filtering


def test_filter_classes_to_binary():
    rng = np.random.default_rng(0)
    features = rng.normal(size=(75, 2))
    labels = np.repeat([0, 1, 2], 25)
    d = Dataset(features, labels, 3, class_names=("10", "20", "30"))
    sub = filter_classes(d, ("20", "30"))
    assert sub.num_examples == 50
    assert sub.num_classes == 2
    assert sub.class_names == ("20", "30")
    # First keep entry becomes class 0.
    assert set(sub.labels[:25].tolist()) == {0}
    assert set(sub.labels[25:].tolist()) == {1}


def test_filter_classes_by_dense_index():
    d = make_tiny(num_classes=3, n=60)
    sub = filter_classes(d, (2, 0))
    assert sub.num_classes == 2
    # Order of `keep` decides the new indices: old 2 -> 0, old 0 -> 1.
    orig_counts = d.class_counts()
    assert sub.class_counts().tolist() == [orig_counts[2], orig_counts[0]]


def test_filter_classes_unknown_name():
    d = make_tiny()
    with pytest.raises(DataError):
        filter_classes(d, ("0", "banana"))


# ---------------------------------------------------------------------------
# Holdout split


def test_holdout_split_sizes_and_partition():
    d = make_tiny(n=90, seed=1)
    train, test = holdout_split(d, 1 / 3, rng_from(42))
    assert test.num_examples == 30
    assert train.num_examples == 60
    # Every class present on both sides.
    assert len(np.unique(train.labels)) == d.num_classes
    assert len(np.unique(test.labels)) == d.num_classes


def test_holdout_split_deterministic():
    d = make_tiny(n=90, seed=1)
    a_train, a_test = holdout_split(d, 1 / 3, rng_from(42))
    b_train, b_test = holdout_split(d, 1 / 3, rng_from(42))
    assert a_train.digest() == b_train.digest()
    assert a_test.digest() == b_test.digest()
    c_train, _ = holdout_split(d, 1 / 3, rng_from(43))
    assert c_train.digest() != a_train.digest()


def test_holdout_split_rounds_test_size():
    d = make_tiny(n=100, seed=2)
    _, test = holdout_split(d, 1 / 3, rng_from(0))
    assert test.num_examples == 33


def test_holdout_split_impossible():
    # Two examples of one class cannot appear on both sides if the test
    # fraction consumes the whole dataset.
    d = Dataset(np.arange(8, dtype=float).reshape(4, 2), np.array([0, 0, 0, 1]), 2)
    with pytest.raises(DataError):
        holdout_split(d, 0.95, rng_from(0))


# ---------------------------------------------------------------------------
# Stratified bootstrap


def test_bootstrap_preserves_class_counts():
    d = make_tiny(num_classes=3, n=90, seed=4)
    sample = stratified_bootstrap(d, rng_from(9))
    base = d.class_counts()
    boot = np.bincount(d.labels[sample.in_bag], minlength=3)
    assert boot.tolist() == base.tolist()


def test_bootstrap_out_bag_complement():
    d = make_tiny(n=60)
    s = stratified_bootstrap(d, rng_from(5))
    in_set = set(s.in_bag.tolist())
    out_set = set(s.out_bag.tolist())
    assert in_set.isdisjoint(out_set)
    assert in_set | out_set == set(range(60))
    # out_bag is sorted unique indices
    assert list(s.out_bag) == sorted(out_set)


def test_bootstrap_out_bag_fraction_near_e():
    d = make_tiny(n=600, seed=8)
    fracs = [
        stratified_bootstrap(d, rng_from(1000 + i)).out_bag.size / 600
        for i in range(30)
    ]
    assert 0.33 < float(np.mean(fracs)) < 0.41


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(20, 200))
def test_bootstrap_properties(seed, n):
    d = make_tiny(n=n, seed=seed % 100)
    s = stratified_bootstrap(d, rng_from(seed))
    assert s.in_bag.size == d.num_examples
    # In-bag indices all valid; per-class counts unchanged.
    assert s.in_bag.min() >= 0 and s.in_bag.max() < d.num_examples
    assert np.array_equal(
        np.bincount(d.labels[s.in_bag], minlength=d.num_classes), d.class_counts()
    )
