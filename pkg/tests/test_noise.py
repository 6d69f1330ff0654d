import numpy as np
import pytest

from noisylab.data import LabeledDataset, make_blobs
from noisylab.noise import (
    NoiseFamily,
    NoiseSpec,
    expected_transition,
    inject,
    measure,
)


def flat_dataset(truth, observed, num_classes):
    feats = np.zeros((len(truth), 2))
    return LabeledDataset(feats, truth, observed, num_classes)


class TestExpectedTransition:
    def test_eta_zero_is_identity(self):
        spec = NoiseSpec(NoiseFamily.SYMMETRIC, 0.0, 5)
        assert np.array_equal(expected_transition(spec), np.eye(5))

    def test_eta_one_is_uniform(self):
        spec = NoiseSpec(NoiseFamily.SYMMETRIC, 1.0, 4)
        assert np.allclose(expected_transition(spec), 0.25, atol=0)

    def test_asymmetric_with_self_map(self):
        spec = NoiseSpec(NoiseFamily.ASYMMETRIC, 0.4, 2, {0: 1, 1: 1})
        t = expected_transition(spec)
        assert np.allclose(t[0], [0.6, 0.4])
        assert np.allclose(t[1], [0.0, 1.0])

    def test_rows_sum_to_one(self):
        for spec in (
            NoiseSpec(NoiseFamily.SYMMETRIC, 0.37, 7),
            NoiseSpec(NoiseFamily.ASYMMETRIC, 0.81, 3, {0: 1, 1: 2, 2: 2}),
        ):
            rows = expected_transition(spec).sum(axis=1)
            assert np.abs(rows - 1.0).max() <= 1e-12


class TestSpecValidation:
    def test_eta_range(self):
        with pytest.raises(ValueError):
            NoiseSpec(NoiseFamily.SYMMETRIC, 1.5, 3)

    def test_asymmetric_needs_total_mapping(self):
        with pytest.raises(ValueError):
            NoiseSpec(NoiseFamily.ASYMMETRIC, 0.3, 3, {0: 1})


class TestInject:
    def test_eta_zero_is_identity_on_labels(self):
        ds = make_blobs(4, 50, 3, 6.0, 1.0, seed=3)
        out = inject(ds, NoiseSpec(NoiseFamily.SYMMETRIC, 0.0, 4), seed=10)
        assert np.array_equal(out.observed_labels, ds.observed_labels)
        assert np.array_equal(out.eval_true_labels, ds.eval_true_labels)

    def test_class_count_mismatch(self):
        ds = make_blobs(3, 5, 2, 5.0, 0.5, seed=1)
        with pytest.raises(ValueError):
            inject(ds, NoiseSpec(NoiseFamily.SYMMETRIC, 0.1, 4), seed=0)

    def test_symmetric_keep_rate_within_3_sigma(self):
        # Binomial oracle: keep probability 1 - eta + eta/C = 0.19.
        n, c, eta = 50_000, 10, 0.9
        truth = np.arange(n) % c
        ds = flat_dataset(truth, truth.copy(), c)
        out = inject(ds, NoiseSpec(NoiseFamily.SYMMETRIC, eta, c), seed=77)
        p = 1.0 - eta + eta / c
        sigma = np.sqrt(p * (1 - p) / n)
        kept = (out.observed_labels == truth).mean()
        assert abs(kept - p) <= 3 * sigma

    def test_asymmetric_cross_flip_within_3_sigma(self):
        n, eta = 20_000, 0.4
        truth = np.arange(n) % 2
        ds = flat_dataset(truth, truth.copy(), 2)
        spec = NoiseSpec(NoiseFamily.ASYMMETRIC, eta, 2, {0: 1, 1: 0})
        out = inject(ds, spec, seed=42)
        flipped = (out.observed_labels != truth).mean()
        sigma = np.sqrt(eta * (1 - eta) / n)
        assert abs(flipped - eta) <= 3 * sigma

    def test_determinism(self):
        ds = make_blobs(4, 100, 2, 6.0, 1.0, seed=5)
        spec = NoiseSpec(NoiseFamily.SYMMETRIC, 0.5, 4)
        a = inject(ds, spec, seed=9)
        b = inject(ds, spec, seed=9)
        assert np.array_equal(a.observed_labels, b.observed_labels)


class TestMeasure:
    def test_noise_free_dataset(self):
        truth = np.array([0, 1, 2, 0, 1, 2])
        ds = flat_dataset(truth, truth.copy(), 3)
        report = measure(ds)
        assert np.array_equal(report.transition, np.eye(3))
        assert report.rho_overall == 0.0
        assert report.undefined_rows == ()

    def test_degenerate_all_flipped_to_zero(self):
        truth = np.ones(10, dtype=int)
        observed = np.zeros(10, dtype=int)
        report = measure(flat_dataset(truth, observed, 2))
        # Every observed label landed on class 0 from the wrong class.
        assert report.rho_per_class[0] == 1.0
        assert 0 in report.undefined_rows  # no true class-0 samples
        assert np.isnan(report.transition[0]).all()

    def test_empty_row_not_reported_as_zeros(self):
        truth = np.array([1, 1, 1])
        observed = np.array([1, 0, 1])
        report = measure(flat_dataset(truth, observed, 2))
        assert report.undefined_rows == (0,)
        assert np.isnan(report.transition[0]).all()
        assert not np.isnan(report.transition[1]).any()

    def test_rows_sum_to_one_within_tolerance(self):
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 5, size=4000)
        observed = rng.integers(0, 5, size=4000)
        report = measure(flat_dataset(truth, observed, 5))
        sums = report.transition.sum(axis=1)
        assert np.abs(sums - 1.0).max() <= 1e-9

    def test_measured_matches_expected_within_3_sigma(self):
        n, c, eta = 50_000, 10, 0.5
        truth = np.arange(n) % c
        ds = flat_dataset(truth, truth.copy(), c)
        spec = NoiseSpec(NoiseFamily.SYMMETRIC, eta, c)
        report = measure(inject(ds, spec, seed=123))
        expected = expected_transition(spec)
        row_n = n // c
        sigma = np.sqrt(expected * (1 - expected) / row_n)
        assert (np.abs(report.transition - expected) <= 3 * sigma + 1e-12).all()
