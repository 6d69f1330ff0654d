import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisylab.data import make_blobs
from noisylab.divide import co_pseudo_label, selection_auc, split, tied_ranks
from noisylab.net import Mlp


def pairwise_auc(scores, truth):
    """O(N^2) oracle: wins + half-ties over clean/noisy pairs."""
    pos = scores[truth]
    neg = scores[~truth]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestSplit:
    def setup_method(self):
        self.ds = make_blobs(3, 10, 4, 6.0, 1.0, seed=1)

    def test_tau_zero_keeps_everything(self):
        div = split(self.ds, np.random.default_rng(0).random(30), 0.0)
        assert len(div.clean_ids) == 30
        assert len(div.noisy_ids) == 0

    def test_all_below_threshold(self):
        div = split(self.ds, np.full(30, 0.3), 0.5)
        assert len(div.clean_ids) == 0
        assert len(div.noisy_ids) == 30

    def test_planted_bimodal_recovers_truth(self):
        clean_mask = np.random.default_rng(1).random(30) < 0.5
        p = np.where(clean_mask, 0.97, 0.03)
        div = split(self.ds, p, 0.5)
        assert set(div.clean_ids) == set(np.flatnonzero(clean_mask))

    def test_tie_goes_to_clean(self):
        p = np.full(30, 0.5)
        div = split(self.ds, p, 0.5)
        assert len(div.clean_ids) == 30

    def test_labels_follow_channel(self):
        corrected = (self.ds.observed_labels + 1) % 3
        ds2 = self.ds.with_corrected(corrected)
        div = split(ds2, np.ones(30), 0.5, channel="corrected")
        assert (div.clean_labels.argmax(axis=1) == corrected).all()

    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
    def test_partition_property(self, seed, tau):
        p = np.random.default_rng(seed).random(30)
        div = split(self.ds, p, tau)
        combined = np.sort(np.concatenate([div.clean_ids, div.noisy_ids]))
        assert combined.tolist() == list(range(30))

    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_monotone_in_tau(self, seed, tau_a, tau_b):
        lo, hi = min(tau_a, tau_b), max(tau_a, tau_b)
        p = np.random.default_rng(seed).random(30)
        clean_hi = set(split(self.ds, p, hi).clean_ids)
        clean_lo = set(split(self.ds, p, lo).clean_ids)
        assert clean_hi <= clean_lo


class TestCoPseudoLabel:
    def setup_method(self):
        self.ds = make_blobs(2, 10, 3, 6.0, 1.0, seed=2)
        self.noisy = np.arange(0, 20, 2)

    def test_identical_nets_give_their_output(self):
        net = Mlp.initialize((3, 5, 2), 4)
        pseudo = co_pseudo_label(net, net, self.ds, self.noisy)
        assert np.allclose(pseudo, net.forward(self.ds.features[self.noisy]))

    def test_opposed_certainty_averages_to_half(self):
        big = 50.0
        w = np.zeros((3, 2))
        net_a = Mlp((3, 2), [w.copy()], [np.array([big, -big])])
        net_b = Mlp((3, 2), [w.copy()], [np.array([-big, big])])
        pseudo = co_pseudo_label(net_a, net_b, self.ds, self.noisy)
        assert np.allclose(pseudo, 0.5, atol=1e-12)

    def test_outputs_on_simplex_and_symmetric(self):
        net_a = Mlp.initialize((3, 4, 2), 5)
        net_b = Mlp.initialize((3, 4, 2), 6)
        p_ab = co_pseudo_label(net_a, net_b, self.ds, self.noisy)
        p_ba = co_pseudo_label(net_b, net_a, self.ds, self.noisy)
        assert np.allclose(p_ab, p_ba)
        assert np.abs(p_ab.sum(axis=1) - 1.0).max() <= 1e-9

    def test_empty_noisy_set(self):
        net = Mlp.initialize((3, 4, 2), 7)
        pseudo = co_pseudo_label(net, net, self.ds, np.array([], dtype=int))
        assert pseudo.shape == (0, 2)


class TestSelectionAuc:
    def test_perfect_separation(self):
        truth = np.array([True, True, False, False])
        assert selection_auc(np.array([0.9, 0.8, 0.2, 0.1]), truth) == 1.0

    def test_all_ties_is_half(self):
        truth = np.array([True, False, True, False])
        assert selection_auc(np.full(4, 0.7), truth) == 0.5

    def test_hand_case(self):
        # Pairs: (.9 vs .6)=1, (.9 vs .1)=1, (.4 vs .6)=0, (.4 vs .1)=1.
        p = np.array([0.9, 0.4, 0.6, 0.1])
        truth = np.array([True, True, False, False])
        assert selection_auc(p, truth) == 0.75

    def test_single_class_is_flagged_none(self):
        assert selection_auc(np.array([0.1, 0.9]), np.array([True, True])) is None

    def test_matches_pairwise_oracle_exactly(self):
        rng = np.random.default_rng(3)
        for trial in range(25):
            n = int(rng.integers(2, 120))
            scores = rng.choice([0.1, 0.25, 0.5, 0.8], size=n)
            truth = rng.random(n) < 0.5
            if truth.all() or not truth.any():
                continue
            assert selection_auc(scores, truth) == pairwise_auc(scores, truth)

    def test_tied_ranks_average(self):
        ranks = tied_ranks(np.array([0.3, 0.1, 0.3, 0.9]))
        assert ranks.tolist() == [2.5, 1.0, 2.5, 4.0]
