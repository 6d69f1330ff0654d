import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisylab.data import (
    CsvError,
    LabeledDataset,
    blob_centers,
    load_csv,
    make_blobs,
    one_hot,
    save_csv,
    split_last_per_class,
)


class TestOneHot:
    def test_basis_vectors(self):
        assert one_hot(0, 3).tolist() == [1.0, 0.0, 0.0]
        assert one_hot(2, 3).tolist() == [0.0, 0.0, 1.0]

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            one_hot(3, 3)
        with pytest.raises(ValueError):
            one_hot(-1, 3)

    @given(st.integers(1, 50).flatmap(lambda c: st.tuples(st.just(c), st.integers(0, c - 1))))
    def test_simplex_invariant(self, pair):
        num_classes, c = pair
        v = one_hot(c, num_classes)
        assert abs(v.sum() - 1.0) <= 1e-9
        assert v.min() >= 0.0
        assert v[c] == 1.0


class TestLoadCsv:
    def test_three_row_parse(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("f0,f1,label\n0.5,1.5,0\n2.0,3.0,1\n4.0,5.0,1\n")
        ds = load_csv(p)
        assert len(ds) == 3
        assert ds.num_classes == 2
        assert ds.observed_labels.tolist() == [0, 1, 1]
        assert np.array_equal(ds.observed_labels, ds.eval_true_labels)

    def test_non_numeric_feature_reports_line(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("f0,f1,label\n0.5,1.5,0\nxx,3.0,1\n")
        with pytest.raises(CsvError) as excinfo:
            load_csv(p)
        assert excinfo.value.line == 3

    def test_gap_in_labels_keeps_empty_class(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("f0,label\n1.0,0\n2.0,2\n")
        ds = load_csv(p)
        assert ds.num_classes == 3

    def test_empty_file_is_format_error(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(CsvError):
            load_csv(p)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n1,2,0\n")
        with pytest.raises(CsvError):
            load_csv(p)

    def test_save_round_trip(self, tmp_path):
        ds = make_blobs(3, 5, 4, 5.0, 0.7, seed=11)
        p = tmp_path / "out.csv"
        save_csv(ds, p)
        back = load_csv(p, num_classes=3)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.observed_labels, ds.observed_labels)


class TestMakeBlobs:
    def test_nearest_centroid_separates(self):
        # Oracle: classify by nearest per-class sample mean.
        ds = make_blobs(2, 100, 2, 10.0, 0.5, seed=5)
        truth = ds.eval_true_labels
        centroids = np.stack([ds.features[truth == c].mean(axis=0) for c in range(2)])
        dists = np.linalg.norm(ds.features[:, None, :] - centroids[None], axis=2)
        assert (dists.argmin(axis=1) == truth).all()

    def test_zero_noise_lands_on_centers(self):
        ds = make_blobs(4, 1, 16, 5.0, 0.0, seed=9)
        centers = blob_centers(4, 16, 5.0, seed=9)
        assert np.array_equal(ds.features, centers)

    def test_seed_determinism(self):
        a = make_blobs(3, 20, 8, 6.0, 1.0, seed=21)
        b = make_blobs(3, 20, 8, 6.0, 1.0, seed=21)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.observed_labels, b.observed_labels)

    def test_centers_respect_separation(self):
        centers = blob_centers(6, 3, 4.0, seed=2)
        for i in range(6):
            for j in range(i + 1, 6):
                assert np.linalg.norm(centers[i] - centers[j]) >= 4.0

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            make_blobs(2, 0, 2, 1.0, 0.1, seed=0)
        with pytest.raises(ValueError):
            make_blobs(2, 5, 2, -1.0, 0.1, seed=0)


class TestLabeledDataset:
    def test_ids_are_stable_identity(self):
        ds = make_blobs(2, 10, 3, 5.0, 0.5, seed=1)
        assert ds.ids.tolist() == list(range(20))
        s = ds.sample(7)
        assert np.array_equal(s.features, ds.features[7])

    def test_channels(self):
        feats = np.zeros((4, 2))
        truth = np.array([0, 0, 1, 1])
        obs = np.array([0, 1, 1, 0])
        ds = LabeledDataset(feats, truth, obs, 2)
        assert ds.active_channel == "observed"
        with pytest.raises(ValueError):
            ds.labels("corrected")
        ds2 = ds.with_corrected(np.array([0, 0, 1, 1]))
        assert ds2.active_channel == "corrected"
        assert ds2.labels("observed").tolist() == obs.tolist()
        assert ds2.training_labels.tolist() == [0, 0, 1, 1]

    def test_immutability(self):
        ds = make_blobs(2, 4, 2, 5.0, 0.5, seed=1)
        with pytest.raises(ValueError):
            ds.features[0, 0] = 99.0
        with pytest.raises(ValueError):
            ds.observed_labels[0] = 1

    def test_label_range_validation(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 1)), [0, 2], [0, 1], 2)

    def test_non_finite_features_rejected(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.array([[np.nan], [0.0]]), [0, 0], [0, 0], 1)


class TestSplitLastPerClass:
    def test_split_counts_and_distinctness(self):
        ds = make_blobs(3, 10, 4, 6.0, 1.0, seed=4)
        train, test = split_last_per_class(ds, 2)
        assert len(train) == 24 and len(test) == 6
        for c in range(3):
            assert (test.eval_true_labels == c).sum() == 2
        # No feature row appears in both halves.
        joined = np.concatenate([train.features, test.features])
        assert len(np.unique(joined, axis=0)) == len(joined)

    def test_too_small_class_rejected(self):
        ds = make_blobs(2, 3, 2, 5.0, 0.5, seed=4)
        with pytest.raises(ValueError):
            split_last_per_class(ds, 3)
