"""Confidence-thresholded label correction and its safety-bound harness.

`correct` relabels every sample whose ensemble confidence reaches tau_ps
with the hard argmax of its prediction; everything else keeps its current
label. The safe threshold for a class with flip-in rate rho is
(1 + rho) / 2: whenever the noisy-label conditional of a class exceeds
that bound, the clean conditional of the same class must exceed 1/2, so
the argmax relabel is correct.

`DiscreteNoisyWorld` models the setting in which that guarantee is
provable: a finite input space with exact rational conditionals and a
corruption channel whose flip-in rate to class c is the same from every
wrong source class (so the rate is independent of the input).
`verify_theorem1` checks the implication exhaustively with Fraction
arithmetic, and reports any counterexample instead of asserting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .data import LabeledDataset


@dataclass(frozen=True)
class CorrectedDataset:
    """Outcome of one correction pass over every id.

    `relabeled_ids` received the argmax pseudo-label (confidence >= tau_ps);
    `kept_ids` kept their previous label. `corrected_labels` is the full
    revised label vector, index-aligned with the dataset.
    """

    kept_ids: np.ndarray
    relabeled_ids: np.ndarray
    corrected_labels: np.ndarray
    confidence: np.ndarray
    tau_ps: float

    def __post_init__(self):
        if np.intersect1d(self.kept_ids, self.relabeled_ids).size:
            raise ValueError("kept and relabeled sets overlap")
        n = len(self.corrected_labels)
        if len(self.kept_ids) + len(self.relabeled_ids) != n:
            raise ValueError("kept and relabeled sets must partition all ids")
        if self.relabeled_ids.size and self.confidence[self.relabeled_ids].min() < self.tau_ps:
            raise ValueError("relabeled id below the confidence threshold")
        if self.kept_ids.size and self.confidence[self.kept_ids].max() >= self.tau_ps:
            raise ValueError("kept id at or above the confidence threshold")


@dataclass(frozen=True)
class RecoMetrics:
    """Size of the relabeled set and its precision against ground truth.

    Precision is None (undefined) when nothing was relabeled.
    """

    size: int
    precision: float | None


def correct(
    dataset: LabeledDataset, predictions: np.ndarray, tau_ps: float
) -> CorrectedDataset:
    """Relabel ids whose max predicted probability reaches tau_ps.

    Predictions are expected on raw (un-augmented) inputs. Argmax ties
    break toward the lowest class index. Ids below the threshold keep the
    dataset's current training label, so repeated application with the
    same predictions is idempotent.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    if predictions.shape != (len(dataset), dataset.num_classes):
        raise ValueError("predictions must be an (N, C) matrix")
    if not 0.0 <= tau_ps <= 1.0:
        raise ValueError(f"tau_ps must be in [0, 1], got {tau_ps}")
    confidence = predictions.max(axis=1)
    hard = predictions.argmax(axis=1)
    relabel = confidence >= tau_ps
    corrected = np.where(relabel, hard, dataset.training_labels)
    return CorrectedDataset(
        kept_ids=np.flatnonzero(~relabel),
        relabeled_ids=np.flatnonzero(relabel),
        corrected_labels=corrected,
        confidence=confidence,
        tau_ps=float(tau_ps),
    )


def reco_metrics(corrected: CorrectedDataset, dataset: LabeledDataset) -> RecoMetrics:
    """Evaluation-context statistics of a correction pass."""
    ids = corrected.relabeled_ids
    if ids.size == 0:
        return RecoMetrics(size=0, precision=None)
    hits = corrected.corrected_labels[ids] == dataset.eval_true_labels[ids]
    return RecoMetrics(size=int(ids.size), precision=float(hits.mean()))


def theorem1_bound(rho_c: float) -> float:
    """Upper bound (1 + rho_c) / 2 on a safe correction threshold."""
    if not 0.0 <= rho_c <= 1.0:
        raise ValueError(f"rho_c must be in [0, 1], got {rho_c}")
    return (1.0 + rho_c) / 2.0


class WorldError(ValueError):
    """Raised when a discrete world fails its consistency checks."""


@dataclass(frozen=True)
class DiscreteNoisyWorld:
    """Finite, exactly-specified noisy-label world.

    All entries are Fractions. `class_given_input[x][c]` is the clean
    conditional of class c at input x; `flip_in_rates[c]` is the
    probability that a sample of any other class gets observed as c, the
    same for every wrong source class. `transition` and
    `noisy_given_input` must equal the values those two induce.
    """

    input_weights: tuple
    class_given_input: tuple
    flip_in_rates: tuple
    transition: tuple
    noisy_given_input: tuple

    @property
    def num_inputs(self) -> int:
        return len(self.input_weights)

    @property
    def num_classes(self) -> int:
        return len(self.flip_in_rates)


def transition_from_rates(flip_in_rates) -> tuple:
    """Row-stochastic channel with constant off-diagonal columns."""
    rates = [Fraction(r) for r in flip_in_rates]
    c = len(rates)
    total = sum(rates)
    rows = []
    for k in range(c):
        keep = 1 - (total - rates[k])
        if keep < 0:
            raise WorldError("flip-in rates leave class %d a negative keep rate" % k)
        rows.append(tuple(keep if j == k else rates[j] for j in range(c)))
    return tuple(rows)


def world_from_rates(input_weights, class_given_input, flip_in_rates) -> DiscreteNoisyWorld:
    """Build a consistent world from clean conditionals and flip-in rates."""
    weights = tuple(Fraction(w) for w in input_weights)
    alpha = tuple(tuple(Fraction(v) for v in row) for row in class_given_input)
    rates = tuple(Fraction(r) for r in flip_in_rates)
    transition = transition_from_rates(rates)
    noisy = tuple(
        tuple(
            sum(row[k] * transition[k][c] for k in range(len(rates)))
            for c in range(len(rates))
        )
        for row in alpha
    )
    world = DiscreteNoisyWorld(weights, alpha, rates, transition, noisy)
    validate_world(world)
    return world


def validate_world(world: DiscreteNoisyWorld) -> None:
    """Exact consistency checks; raises WorldError on the first failure."""
    c = world.num_classes
    if c < 2:
        raise WorldError("need at least two classes")
    if world.num_inputs < 1:
        raise WorldError("need at least one input")
    if any(w < 0 for w in world.input_weights) or sum(world.input_weights) != 1:
        raise WorldError("input weights must be a distribution")
    for name, rows in (
        ("clean conditional", world.class_given_input),
        ("noisy conditional", world.noisy_given_input),
    ):
        for x, row in enumerate(rows):
            if len(row) != c:
                raise WorldError(f"{name} at input {x} has wrong length")
            if any(v < 0 for v in row) or sum(row) != 1:
                raise WorldError(f"{name} at input {x} is not a distribution")
    for r in world.flip_in_rates:
        if not 0 <= r <= 1:
            raise WorldError("flip-in rates must lie in [0, 1]")
    expected_transition = transition_from_rates(world.flip_in_rates)
    if tuple(world.transition) != expected_transition:
        raise WorldError("transition does not match the flip-in rates")
    for x in range(world.num_inputs):
        for cc in range(c):
            induced = sum(
                world.class_given_input[x][k] * world.transition[k][cc]
                for k in range(c)
            )
            if induced != world.noisy_given_input[x][cc]:
                raise WorldError(
                    f"noisy conditional at input {x}, class {cc} is inconsistent"
                )


@dataclass(frozen=True)
class TheoremVerdict:
    passed: bool
    checks: int
    premise_hits: int
    counterexample: tuple[int, int] | None


def verify_theorem1(world: DiscreteNoisyWorld) -> TheoremVerdict:
    """Exhaustively check: noisy conditional above (1 + rho_c)/2 implies
    clean conditional above 1/2, for every (input, class) pair."""
    validate_world(world)
    half = Fraction(1, 2)
    checks = 0
    hits = 0
    for x in range(world.num_inputs):
        for c in range(world.num_classes):
            checks += 1
            bound = (1 + world.flip_in_rates[c]) / 2
            if world.noisy_given_input[x][c] > bound:
                hits += 1
                if not world.class_given_input[x][c] > half:
                    return TheoremVerdict(False, checks, hits, (x, c))
    return TheoremVerdict(True, checks, hits, None)


def random_world(
    rng: np.random.Generator, max_classes: int = 5, max_inputs: int = 6
) -> DiscreteNoisyWorld:
    """Random consistent world with small-denominator rational entries."""
    c = int(rng.integers(2, max_classes + 1))
    m = int(rng.integers(1, max_inputs + 1))
    weights = _random_simplex(rng, m, strict=True)
    alpha = [_random_simplex(rng, c) for _ in range(m)]
    raw = rng.integers(0, 10, size=c)
    if raw.sum() == 0:
        rates = [Fraction(0)] * c
    else:
        # Denominator large enough that every keep rate stays non-negative.
        denom = int(raw.sum() - raw.min()) + int(rng.integers(1, 11))
        rates = [Fraction(int(v), denom) for v in raw]
    return world_from_rates(weights, alpha, rates)


def _random_simplex(rng, size, strict=False):
    lo = 1 if strict else 0
    while True:
        raw = rng.integers(lo, 10, size=size)
        if raw.sum() > 0:
            break
    total = int(raw.sum())
    return [Fraction(int(v), total) for v in raw]


@dataclass(frozen=True)
class VerifySummary:
    worlds: int
    checks: int
    premise_hits: int
    counterexamples: tuple


def verify_many(
    num_worlds: int, seed: int, max_classes: int = 5, max_inputs: int = 6
) -> VerifySummary:
    """Generate and check many random worlds; collects all failures."""
    rng = np.random.default_rng(seed)
    checks = 0
    hits = 0
    failures = []
    for i in range(num_worlds):
        world = random_world(rng, max_classes=max_classes, max_inputs=max_inputs)
        verdict = verify_theorem1(world)
        checks += verdict.checks
        hits += verdict.premise_hits
        if not verdict.passed:
            failures.append((i, verdict.counterexample))
    return VerifySummary(num_worlds, checks, hits, tuple(failures))
