"""Clean/noisy partitioning from clean probabilities, co-teaching
pseudo-labels, and the rank-based selection AUC."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import SIMPLEX_ATOL, LabeledDataset, one_hot_matrix
from .net import Mlp


@dataclass(frozen=True)
class Division:
    """A partition of dataset ids into a clean set and a noisy set.

    `clean_labels` holds one simplex vector per clean id (the label channel
    chosen at split time); `noisy_pseudo` is filled later by
    `co_pseudo_label`. `source_net` records which net's loss model produced
    the clean probabilities, so the trainer can assert its cross-wiring.
    """

    clean_ids: np.ndarray
    noisy_ids: np.ndarray
    clean_labels: np.ndarray
    noisy_pseudo: np.ndarray | None
    tau_c: float
    num_samples: int
    source_net: int | None = None

    def __post_init__(self):
        combined = np.concatenate([self.clean_ids, self.noisy_ids])
        if len(np.unique(combined)) != len(combined):
            raise ValueError("clean and noisy sets overlap")
        if sorted(combined.tolist()) != list(range(self.num_samples)):
            raise ValueError("clean and noisy sets must partition all ids")
        _check_simplex(self.clean_labels, len(self.clean_ids))
        if self.noisy_pseudo is not None:
            _check_simplex(self.noisy_pseudo, len(self.noisy_ids))

    def with_pseudo(self, pseudo: np.ndarray) -> "Division":
        return replace(self, noisy_pseudo=pseudo)


def _check_simplex(vectors: np.ndarray, expected_rows: int):
    if vectors.shape[0] != expected_rows:
        raise ValueError("one vector per id is required")
    if expected_rows == 0:
        return
    if vectors.min() < -SIMPLEX_ATOL:
        raise ValueError("simplex vectors must be non-negative")
    if np.abs(vectors.sum(axis=1) - 1.0).max() > SIMPLEX_ATOL:
        raise ValueError("simplex vectors must sum to 1")


def split(
    dataset: LabeledDataset,
    p_clean: np.ndarray,
    tau_c: float,
    channel: str = "observed",
    source_net: int | None = None,
) -> Division:
    """Ids with clean probability >= tau_c form the clean set.

    Clean labels are one-hot encodings of the requested label channel;
    noisy pseudo-labels stay unfilled until `co_pseudo_label` runs.
    """
    p_clean = np.asarray(p_clean, dtype=np.float64)
    if p_clean.shape != (len(dataset),):
        raise ValueError("p_clean must hold one probability per id")
    if not 0.0 <= tau_c <= 1.0:
        raise ValueError(f"tau_c must be in [0, 1], got {tau_c}")
    clean_mask = p_clean >= tau_c
    clean_ids = np.flatnonzero(clean_mask)
    noisy_ids = np.flatnonzero(~clean_mask)
    clean_labels = one_hot_matrix(
        dataset.labels(channel)[clean_ids], dataset.num_classes
    )
    return Division(
        clean_ids=clean_ids,
        noisy_ids=noisy_ids,
        clean_labels=clean_labels,
        noisy_pseudo=None,
        tau_c=float(tau_c),
        num_samples=len(dataset),
        source_net=source_net,
    )


def co_pseudo_label(
    net_a: Mlp,
    net_b: Mlp,
    dataset: LabeledDataset,
    noisy_ids: np.ndarray,
    features: np.ndarray | None = None,
) -> np.ndarray:
    """Mean of the two nets' softmax outputs for each noisy id.

    `features` overrides the inputs (the trainer passes weakly augmented
    views); by default the raw dataset features are used.
    """
    if net_a.num_classes != net_b.num_classes:
        raise ValueError("the two nets must share the class count")
    feats = dataset.features if features is None else np.asarray(features)
    if feats.shape != dataset.features.shape:
        raise ValueError("features must be an (N, d) view of the dataset")
    noisy_ids = np.asarray(noisy_ids, dtype=np.int64)
    if noisy_ids.size == 0:
        return np.zeros((0, net_a.num_classes))
    x = feats[noisy_ids]
    return 0.5 * (net_a.forward(x) + net_b.forward(x))


def tied_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the group average."""
    values = np.asarray(values)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j < len(values) and values[order[j]] == values[order[i]]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j + 1)
        i = j
    return ranks


def selection_auc(p_clean: np.ndarray, truly_clean: np.ndarray) -> float | None:
    """Probability a random truly-clean id outranks a random truly-noisy
    one, ties counting one half. Returns None when only one class is
    present (the statistic is undefined)."""
    p_clean = np.asarray(p_clean, dtype=np.float64)
    truly_clean = np.asarray(truly_clean, dtype=bool)
    if p_clean.shape != truly_clean.shape:
        raise ValueError("probability and truth vectors must align")
    n_pos = int(truly_clean.sum())
    n_neg = len(truly_clean) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = tied_ranks(p_clean)
    u = ranks[truly_clean].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
