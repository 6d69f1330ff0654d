"""Convex-interpolation construction of mixed clean and noisy sets.

Every clean id yields exactly one mixed item whose first element is the id
itself and whose partner is drawn uniformly (with replacement) from the
union of both sets; likewise for every noisy id. The interpolation
coefficient is Beta(alpha, alpha), optionally folded to max(lam, 1-lam) so
each mixed item stays dominated by its first element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divide import Division

FROM_CLEAN = 0
FROM_NOISY = 1


@dataclass(frozen=True)
class MixedBatch:
    """Interpolated inputs/targets plus the bookkeeping that produced them."""

    inputs: np.ndarray
    targets: np.ndarray
    origin: int
    lambdas: np.ndarray
    first_ids: np.ndarray
    partner_ids: np.ndarray

    def __len__(self) -> int:
        return self.inputs.shape[0]


def interpolate(a: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """lam * a + (1 - lam) * b, for feature or label vectors alike."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return lam * a + (1.0 - lam) * b


def _beta_draws(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Beta(alpha, alpha) via the ratio of two Gamma(alpha) draws.

    Boundary values (possible only through floating-point underflow) are
    redrawn so the support is the open interval (0, 1).
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    out = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        g1 = rng.gamma(alpha, size=todo.size)
        g2 = rng.gamma(alpha, size=todo.size)
        total = g1 + g2
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(total > 0.0, g1 / np.maximum(total, 1e-300), 0.5)
        out[todo] = lam
        todo = todo[~((lam > 0.0) & (lam < 1.0))]
    return out


def sample_beta(alpha: float, rng: np.random.Generator) -> float:
    """A single Beta(alpha, alpha) draw in (0, 1)."""
    return float(_beta_draws(alpha, 1, rng)[0])


def build_mixed_sets(
    division: Division,
    alpha: float,
    rng: np.random.Generator,
    features: np.ndarray,
    partner_features: np.ndarray | None = None,
    fold_lambda: bool = True,
    lambda_override: float | None = None,
) -> tuple[MixedBatch, MixedBatch]:
    """Mixed clean and noisy sets, size-preserving by construction.

    `features[i]` supplies the first-element input for id i and
    `partner_features[j]` the partner input for id j (they default to the
    same matrix; the trainer passes different augmented views). First
    elements keep their division labels (clean label or pseudo-label);
    partner labels are whichever of the two their id carries.
    `lambda_override` pins the interpolation coefficient, bypassing the
    Beta draw and the fold; useful for ablations and limit checks.
    """
    n = division.num_samples
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != n:
        raise ValueError("features must cover every dataset id")
    partner_feats = (
        features
        if partner_features is None
        else np.asarray(partner_features, dtype=np.float64)
    )
    if partner_feats.shape != features.shape:
        raise ValueError("partner_features must match features in shape")
    if len(division.clean_ids) == 0 and len(division.noisy_ids) == 0:
        raise ValueError("division has no ids at all")
    if len(division.noisy_ids) > 0 and division.noisy_pseudo is None:
        raise ValueError("noisy pseudo-labels must be filled before mixing")

    num_classes = division.clean_labels.shape[1] if len(division.clean_ids) else (
        division.noisy_pseudo.shape[1]
    )
    all_targets = np.zeros((n, num_classes))
    all_targets[division.clean_ids] = division.clean_labels
    if len(division.noisy_ids):
        all_targets[division.noisy_ids] = division.noisy_pseudo

    def mix_one_set(ids: np.ndarray, first_targets: np.ndarray, origin: int):
        k = len(ids)
        if k == 0:
            d = features.shape[1]
            return MixedBatch(
                inputs=np.zeros((0, d)),
                targets=np.zeros((0, num_classes)),
                origin=origin,
                lambdas=np.zeros(0),
                first_ids=ids,
                partner_ids=ids,
            )
        if lambda_override is not None:
            if not 0.0 <= lambda_override <= 1.0:
                raise ValueError("lambda_override must be in [0, 1]")
            lam = np.full(k, float(lambda_override))
        else:
            lam = _beta_draws(alpha, k, rng)
            if fold_lambda:
                lam = np.maximum(lam, 1.0 - lam)
        partners = rng.integers(0, n, size=k)
        lam_col = lam[:, None]
        inputs = lam_col * features[ids] + (1.0 - lam_col) * partner_feats[partners]
        targets = lam_col * first_targets + (1.0 - lam_col) * all_targets[partners]
        return MixedBatch(
            inputs=inputs,
            targets=targets,
            origin=origin,
            lambdas=lam,
            first_ids=ids,
            partner_ids=partners,
        )

    mixed_clean = mix_one_set(division.clean_ids, division.clean_labels, FROM_CLEAN)
    noisy_first = (
        division.noisy_pseudo
        if division.noisy_pseudo is not None
        else np.zeros((0, num_classes))
    )
    mixed_noisy = mix_one_set(division.noisy_ids, noisy_first, FROM_NOISY)
    return mixed_clean, mixed_noisy
