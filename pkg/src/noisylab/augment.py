"""Feature-space weak/strong augmentation views.

Three view roles, mirroring how the training loop consumes them:

* raw      -- the identity; the only view allowed for loss modeling and
              label-correction predictions;
* weak     -- small isotropic Gaussian jitter; used for pseudo-labeling;
* strong   -- larger jitter plus random coordinate masking; used only for
              optimization inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AugSpec:
    """Absolute jitter scales; weak_sigma <= strong_sigma, mask_prob < 1."""

    weak_sigma: float
    strong_sigma: float
    strong_mask_prob: float

    def __post_init__(self):
        if not 0.0 <= self.weak_sigma <= self.strong_sigma:
            raise ValueError(
                f"need 0 <= weak_sigma <= strong_sigma, got "
                f"{self.weak_sigma} and {self.strong_sigma}"
            )
        if not 0.0 <= self.strong_mask_prob < 1.0:
            raise ValueError(
                f"strong_mask_prob must be in [0, 1), got {self.strong_mask_prob}"
            )


def raw(x: np.ndarray) -> np.ndarray:
    """Identity view."""
    return x


def weak(x: np.ndarray, spec: AugSpec, rng: np.random.Generator) -> np.ndarray:
    """x plus N(0, weak_sigma^2 I) jitter."""
    x = np.asarray(x, dtype=np.float64)
    return x + spec.weak_sigma * rng.standard_normal(x.shape)


def strong(x: np.ndarray, spec: AugSpec, rng: np.random.Generator) -> np.ndarray:
    """(x + N(0, strong_sigma^2 I) jitter) with coordinates zeroed
    independently with probability strong_mask_prob."""
    x = np.asarray(x, dtype=np.float64)
    jittered = x + spec.strong_sigma * rng.standard_normal(x.shape)
    mask = rng.random(x.shape) >= spec.strong_mask_prob
    return jittered * mask


def paired_views(x: np.ndarray, spec: AugSpec, rng: np.random.Generator):
    """(weak_1, weak_2, strong) views with independent child streams."""
    r1, r2, r3 = rng.spawn(3)
    return weak(x, spec, r1), weak(x, spec, r2), strong(x, spec, r3)


def view_matrices(features: np.ndarray, spec: AugSpec, rng: np.random.Generator):
    """paired_views applied to a whole (N, d) feature matrix at once."""
    return paired_views(np.asarray(features, dtype=np.float64), spec, rng)
