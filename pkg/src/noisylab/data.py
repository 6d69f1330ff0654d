"""Datasets, label channels, one-hot encodings, and index bookkeeping.

A dataset keeps three label channels per sample:

* ``true``      -- ground truth, retained for evaluation only;
* ``observed``  -- the (possibly corrupted) labels training starts from;
* ``corrected`` -- optional revised labels, absent until label correction.

Sample ``i`` keeps index ``i`` for the whole run, so any per-sample metric
can be joined back to the dataset by position.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .rng import child_seed

SIMPLEX_ATOL = 1e-9

TRAINING_CHANNELS = ("observed", "corrected")


class CsvError(ValueError):
    """Raised for malformed dataset CSV files; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Sample:
    """A single example. `true_label` is for evaluation only."""

    features: np.ndarray
    true_label: int
    observed_label: int


def one_hot(c: int, num_classes: int) -> np.ndarray:
    """One-hot vector with a single 1 at class index `c`."""
    if not 0 <= c < num_classes:
        raise ValueError(f"class index {c} out of range [0, {num_classes})")
    v = np.zeros(num_classes)
    v[c] = 1.0
    return v


def one_hot_matrix(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Row-stacked one-hot encodings for an integer label vector."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError("label out of range for one-hot encoding")
    out = np.zeros((len(labels), num_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class LabeledDataset:
    """Immutable feature/label store with stable integer ids 0..N-1."""

    def __init__(
        self,
        features: np.ndarray,
        true_labels: np.ndarray,
        observed_labels: np.ndarray,
        num_classes: int,
        corrected_labels: np.ndarray | None = None,
    ):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError("features must be a non-empty (N, d) array")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        n = features.shape[0]
        if num_classes < 1:
            raise ValueError("num_classes must be positive")

        def check_labels(name, labels):
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
                raise ValueError(f"{name} contains out-of-range class indices")
            return labels

        self._features = _frozen(features)
        self._true = _frozen(check_labels("true_labels", true_labels))
        self._observed = _frozen(check_labels("observed_labels", observed_labels))
        self._corrected = (
            None
            if corrected_labels is None
            else _frozen(check_labels("corrected_labels", corrected_labels))
        )
        self.num_classes = int(num_classes)

    def __len__(self) -> int:
        return self._features.shape[0]

    @property
    def dim(self) -> int:
        return self._features.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self))

    @property
    def features(self) -> np.ndarray:
        return self._features

    @property
    def observed_labels(self) -> np.ndarray:
        return self._observed

    @property
    def corrected_labels(self) -> np.ndarray | None:
        return self._corrected

    @property
    def eval_true_labels(self) -> np.ndarray:
        """Ground-truth labels. Evaluation only; never feed to training ops."""
        return self._true

    @property
    def active_channel(self) -> str:
        """The label channel training should read: corrected once it exists."""
        return "corrected" if self._corrected is not None else "observed"

    @property
    def training_labels(self) -> np.ndarray:
        return self.labels(self.active_channel)

    def labels(self, channel: str) -> np.ndarray:
        """Labels of a training channel ('observed' or 'corrected')."""
        if channel == "observed":
            return self._observed
        if channel == "corrected":
            if self._corrected is None:
                raise ValueError("corrected channel has not been set")
            return self._corrected
        raise ValueError(f"unknown label channel {channel!r}")

    def one_hot_labels(self, channel: str) -> np.ndarray:
        return one_hot_matrix(self.labels(channel), self.num_classes)

    def sample(self, i: int) -> Sample:
        return Sample(self._features[i], int(self._true[i]), int(self._observed[i]))

    def with_observed(self, observed: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self._features, self._true, observed, self.num_classes)

    def with_corrected(self, corrected: np.ndarray) -> "LabeledDataset":
        """New dataset carrying a corrected channel; observed is preserved."""
        return LabeledDataset(
            self._features, self._true, self._observed, self.num_classes, corrected
        )


def load_csv(path, num_classes: int | None = None) -> LabeledDataset:
    """Load a dataset from CSV with header ``f0,...,f{d-1},label``.

    The parsed label fills both the true and observed channels; corrupt the
    observed channel separately if noise is wanted. Unless `num_classes`
    is given, the class count is 1 + the maximum label present.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvError("empty file") from None
        d = len(header) - 1
        expected = [f"f{i}" for i in range(d)] + ["label"]
        if d < 1 or header != expected:
            raise CsvError(
                f"header must be f0,...,f{{d-1}},label; got {','.join(header)}", line=1
            )
        rows = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 1:
                raise CsvError(f"expected {d + 1} fields, got {len(row)}", line=lineno)
            try:
                feats = [float(v) for v in row[:-1]]
            except ValueError:
                raise CsvError(f"non-numeric feature in {row!r}", line=lineno) from None
            if not all(np.isfinite(feats)):
                raise CsvError("non-finite feature value", line=lineno)
            try:
                label = int(row[-1])
            except ValueError:
                raise CsvError(f"non-integer label {row[-1]!r}", line=lineno) from None
            if label < 0:
                raise CsvError(f"negative label {label}", line=lineno)
            rows.append(feats)
            labels.append(label)
    if not rows:
        raise CsvError("file has a header but no data rows")
    features = np.array(rows)
    labels = np.array(labels)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    return LabeledDataset(features, labels, labels.copy(), num_classes)


def save_csv(dataset: LabeledDataset, path, channel: str = "observed") -> None:
    """Write features plus one label channel in the load_csv format."""
    labels = dataset.labels(channel)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(dataset.dim)] + ["label"])
        for feats, label in zip(dataset.features, labels):
            writer.writerow([repr(float(v)) for v in feats] + [int(label)])


def blob_centers(
    num_classes: int, dim: int, separation: float, seed: int
) -> np.ndarray:
    """Deterministic class centers with pairwise distance >= separation.

    Candidates come from an isotropic Gaussian whose scale puts typical
    pairwise distances just above the floor, so `separation` really
    controls how far apart classes end up; rejection keeps the guarantee
    exact. The accept/reject path is a pure function of the seed.
    """
    if num_classes < 1 or dim < 1:
        raise ValueError("num_classes and dim must be positive")
    if separation <= 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    # Two N(0, s^2 I_d) points sit ~ s*sqrt(2d) apart on average.
    scale = 1.3 * separation / np.sqrt(2.0 * dim)
    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < num_classes:
        candidate = rng.normal(scale=scale, size=dim)
        attempts += 1
        if attempts > 100_000:
            raise RuntimeError("could not place well-separated centers")
        if all(np.linalg.norm(candidate - c) >= separation for c in centers):
            centers.append(candidate)
    return np.array(centers)


def make_blobs(
    num_classes: int,
    per_class: int,
    dim: int,
    separation: float,
    noise_sigma: float,
    seed: int,
) -> LabeledDataset:
    """Synthetic Gaussian-blob dataset: class c is `per_class` draws around
    a seed-derived center, observed labels equal to true labels."""
    if per_class < 1:
        raise ValueError("per_class must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    centers = blob_centers(num_classes, dim, separation, seed)
    # Sample stream kept distinct from the center stream.
    rng = np.random.default_rng(child_seed(seed, "blobs", "samples"))
    features = np.concatenate(
        [
            centers[c] + noise_sigma * rng.standard_normal((per_class, dim))
            for c in range(num_classes)
        ]
    )
    labels = np.repeat(np.arange(num_classes), per_class)
    return LabeledDataset(features, labels, labels.copy(), num_classes)


def split_last_per_class(
    dataset: LabeledDataset, per_class: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split off the last `per_class` samples of every true class.

    Used to carve a held-out test set out of one generated blob dataset so
    both halves share the same class centers.
    """
    truth = dataset.eval_true_labels
    test_mask = np.zeros(len(dataset), dtype=bool)
    for c in range(dataset.num_classes):
        idx = np.flatnonzero(truth == c)
        if len(idx) <= per_class:
            raise ValueError(
                f"class {c} has {len(idx)} samples; cannot hold out {per_class}"
            )
        test_mask[idx[len(idx) - per_class :]] = True

    def subset(mask):
        return LabeledDataset(
            dataset.features[mask],
            truth[mask],
            dataset.observed_labels[mask],
            dataset.num_classes,
        )

    return subset(~test_mask), subset(test_mask)
