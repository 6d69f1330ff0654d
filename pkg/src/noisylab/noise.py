"""Synthetic label corruption and exact transition statistics.

Two noise families are supported. Symmetric noise resamples the label
uniformly over all C classes with probability eta (so self-flips are
allowed and the keep probability is 1 - eta + eta/C). Asymmetric noise
flips class i to a fixed target M(i) with probability eta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data import LabeledDataset


class NoiseFamily(Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption recipe: family, flip probability, and (asymmetric) class map."""

    family: NoiseFamily
    eta: float
    num_classes: int
    mapping: dict[int, int] | None = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must be in [0, 1], got {self.eta}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if self.family is NoiseFamily.ASYMMETRIC:
            m = self.mapping
            if m is None or sorted(m) != list(range(self.num_classes)):
                raise ValueError(
                    "asymmetric noise needs a target class for every class"
                )
            if any(not 0 <= dst < self.num_classes for dst in m.values()):
                raise ValueError("mapping targets must be valid class indices")


@dataclass(frozen=True)
class NoiseReport:
    """Empirical flip statistics measured from the two label channels.

    Transition rows for true classes with no samples are NaN and listed in
    `undefined_rows` instead of being reported as zeros. `rho_per_class[c]`
    is the fraction of samples from other classes whose observed label
    landed on c; it is NaN when no such samples exist.
    """

    transition: np.ndarray
    rho_per_class: np.ndarray
    rho_overall: float
    counts: np.ndarray
    undefined_rows: tuple[int, ...] = field(default=())
    undefined_rho: tuple[int, ...] = field(default=())


def expected_transition(spec: NoiseSpec) -> np.ndarray:
    """Closed-form row-stochastic transition matrix for a noise spec."""
    c = spec.num_classes
    eta = spec.eta
    if spec.family is NoiseFamily.SYMMETRIC:
        t = np.full((c, c), eta / c)
        np.fill_diagonal(t, 1.0 - eta + eta / c)
        return t
    t = np.zeros((c, c))
    for i in range(c):
        dst = spec.mapping[i]
        t[i, i] = 1.0 - eta + (eta if dst == i else 0.0)
        if dst != i:
            t[i, dst] = eta
    return t


def inject(dataset: LabeledDataset, spec: NoiseSpec, seed: int) -> LabeledDataset:
    """Resample each observed label from its true label's transition row.

    True labels are untouched; the result is deterministic under `seed`.
    """
    if dataset.num_classes != spec.num_classes:
        raise ValueError(
            f"dataset has {dataset.num_classes} classes, spec expects {spec.num_classes}"
        )
    rng = np.random.default_rng(seed)
    truth = dataset.eval_true_labels
    n = len(dataset)
    flip = rng.random(n) < spec.eta
    if spec.family is NoiseFamily.SYMMETRIC:
        resampled = rng.integers(0, spec.num_classes, size=n)
    else:
        target = np.array([spec.mapping[c] for c in range(spec.num_classes)])
        resampled = target[truth]
    observed = np.where(flip, resampled, truth)
    return dataset.with_observed(observed)


def measure(dataset: LabeledDataset) -> NoiseReport:
    """Empirical transition counts and per-class noise rates.

    Evaluation-context operation: reads the true label channel.
    """
    c = dataset.num_classes
    truth = dataset.eval_true_labels
    observed = dataset.observed_labels
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (truth, observed), 1)

    row_totals = counts.sum(axis=1)
    transition = np.full((c, c), np.nan)
    defined = row_totals > 0
    transition[defined] = counts[defined] / row_totals[defined, None]
    undefined_rows = tuple(int(i) for i in np.flatnonzero(~defined))

    rho = np.full(c, np.nan)
    undefined_rho = []
    n = len(dataset)
    for k in range(c):
        others = n - row_totals[k]
        if others == 0:
            undefined_rho.append(k)
            continue
        flipped_in = counts[:, k].sum() - counts[k, k]
        rho[k] = flipped_in / others
    rho_overall = float(np.mean(rho)) if not undefined_rho else float("nan")
    return NoiseReport(
        transition=transition,
        rho_per_class=rho,
        rho_overall=rho_overall,
        counts=counts,
        undefined_rows=undefined_rows,
        undefined_rho=tuple(undefined_rho),
    )
