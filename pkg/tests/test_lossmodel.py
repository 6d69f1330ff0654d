import math

import numpy as np
import pytest

from noisylab.data import make_blobs
from noisylab.lossmodel import (
    GmmFit,
    fit_gmm,
    per_sample_losses,
    posterior_clean,
)
from noisylab.net import Mlp, loss_ce
from noisylab.data import one_hot


def planted_draws(n=5000, seed=0):
    rng = np.random.default_rng(seed)
    component = rng.random(n) < 0.8
    low = 0.1 + 0.05 * rng.standard_normal(n)
    high = 0.7 + 0.1 * rng.standard_normal(n)
    return np.where(component, high, low)


class TestPerSampleLosses:
    def test_min_max_normalization(self):
        ds = make_blobs(2, 3, 4, 6.0, 0.5, seed=2)
        net = Mlp.initialize((4, 8, 2), 1)
        lv = per_sample_losses(net, ds)
        assert lv.normalized.min() == 0.0
        assert lv.normalized.max() == 1.0
        assert not lv.degenerate
        spread = lv.hi - lv.lo
        assert np.allclose(lv.normalized, (lv.raw - lv.lo) / spread)

    def test_degenerate_all_equal_maps_to_half(self):
        # A zero net predicts uniformly, so every loss is identical.
        net = Mlp((4, 2), [np.zeros((4, 2))], [np.zeros(2)])
        ds = make_blobs(2, 5, 4, 6.0, 0.5, seed=3)
        lv = per_sample_losses(net, ds)
        assert lv.degenerate
        assert (lv.normalized == 0.5).all()

    def test_raw_matches_per_sample_ce(self):
        ds = make_blobs(3, 8, 5, 6.0, 1.0, seed=4)
        net = Mlp.initialize((5, 6, 3), 9)
        lv = per_sample_losses(net, ds, channel="observed")
        for i in range(len(ds)):
            pred = net.forward(ds.features[i])[None]
            target = one_hot(int(ds.observed_labels[i]), 3)[None]
            assert abs(lv.raw[i] - loss_ce(pred, target)) <= 1e-10


class TestFitGmm:
    def test_planted_mixture_recovery(self):
        fit = fit_gmm(planted_draws())
        assert abs(fit.means[0] - 0.1) <= 0.02
        assert abs(fit.means[1] - 0.7) <= 0.02
        assert abs(fit.weights[0] - 0.2) <= 0.03
        assert abs(fit.weights[1] - 0.8) <= 0.03
        assert abs(fit.weights.sum() - 1.0) <= 1e-9

    def test_log_likelihood_is_monotone(self):
        fit = fit_gmm(planted_draws(seed=5))
        trace = np.array(fit.ll_trace)
        assert (np.diff(trace) >= -1e-9).all()

    def test_all_equal_inputs_degenerate(self):
        fit = fit_gmm(np.full(100, 0.5))
        assert fit.degenerate
        assert fit.means[0] == fit.means[1]
        assert posterior_clean(0.5, fit) == 0.5

    def test_canonical_component_order(self):
        fit = fit_gmm(planted_draws(seed=6))
        assert fit.means[0] <= fit.means[1]

    def test_determinism(self):
        x = planted_draws(seed=7)
        a = fit_gmm(x)
        b = fit_gmm(x)
        assert np.array_equal(a.means, b.means)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.variances, b.variances)

    def test_needs_two_values(self):
        with pytest.raises(ValueError):
            fit_gmm(np.array([0.3]))

    def test_variance_floor_holds(self):
        x = np.concatenate([np.zeros(500), np.ones(500)])
        fit = fit_gmm(x)
        assert (fit.variances >= 1e-6).all()


def symmetric_fit(mu0=0.2, mu1=0.8, var=0.01):
    return GmmFit(
        weights=np.array([0.5, 0.5]),
        means=np.array([mu0, mu1]),
        variances=np.array([var, var]),
        converged=True,
        n_iter=1,
        degenerate=False,
        ll_trace=(),
    )


class TestPosteriorClean:
    def test_midpoint_of_symmetric_fit(self):
        fit = symmetric_fit()
        assert posterior_clean(0.5, fit) == pytest.approx(0.5, abs=1e-12)

    def test_well_separated_evaluation(self):
        # Closed-form check: at x = mu0 with a >10-sigma gap the posterior
        # is within 1e-9 of 1.
        fit = symmetric_fit(mu0=0.0, mu1=0.5, var=0.0016)  # sigma = 0.04
        value = posterior_clean(0.0, fit)
        assert value > 0.999

    def test_monotone_in_x_for_equal_variances(self):
        fit = symmetric_fit()
        xs = np.linspace(-0.5, 1.5, 201)
        post = posterior_clean(xs, fit)
        assert (np.diff(post) <= 1e-12).all()

    def test_posterior_in_unit_interval_and_complementary(self):
        fit = fit_gmm(planted_draws(seed=8))
        xs = np.linspace(-1, 2, 301)
        p0 = posterior_clean(xs, fit)
        assert (p0 >= 0).all() and (p0 <= 1).all()
        # Complement via the mirrored fit (swap components).
        swapped = GmmFit(
            weights=fit.weights[::-1].copy(),
            means=fit.means[::-1].copy(),
            variances=fit.variances[::-1].copy(),
            converged=fit.converged,
            n_iter=fit.n_iter,
            degenerate=False,
            ll_trace=(),
        )
        p1 = posterior_clean(xs, swapped)
        assert np.abs(p0 + p1 - 1.0).max() <= 1e-9
