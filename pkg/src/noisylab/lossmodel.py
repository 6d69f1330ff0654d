"""Per-sample loss modeling with a two-component 1-D Gaussian mixture.

Per-sample cross-entropy losses (computed on raw, un-augmented features)
are min-max normalized to [0, 1] and fitted with EM. Component 0 is the
lower-mean component after canonicalization; its posterior is the clean
probability used for the clean/noisy split downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .net import LOG_FLOOR, Mlp

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class LossVector:
    """Raw and normalized per-sample losses, index-aligned with dataset ids."""

    raw: np.ndarray
    normalized: np.ndarray
    lo: float
    hi: float
    degenerate: bool


@dataclass(frozen=True)
class GmmFit:
    """Canonicalized two-component fit: means[0] <= means[1].

    `ll_trace` holds the mean log-likelihood after every EM iteration and
    is non-decreasing. A degenerate fit (all inputs identical) keeps both
    components equal and answers posterior 0.5 everywhere.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    converged: bool
    n_iter: int
    degenerate: bool
    ll_trace: tuple[float, ...]


def per_sample_losses(
    net: Mlp, dataset: LabeledDataset, channel: str = "observed"
) -> LossVector:
    """Cross-entropy of each sample against its `channel` label.

    Raw losses are min-max normalized; if every loss is identical the
    normalized value is 0.5 for all samples and the vector is flagged.
    """
    probs = net.forward(dataset.features)
    labels = dataset.labels(channel)
    raw = -np.log(np.maximum(probs[np.arange(len(dataset)), labels], LOG_FLOOR))
    lo = float(raw.min())
    hi = float(raw.max())
    if hi == lo:
        return LossVector(raw, np.full_like(raw, 0.5), lo, hi, True)
    return LossVector(raw, (raw - lo) / (hi - lo), lo, hi, False)


def _log_normal_pdf(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def _log_densities(x, weights, means, variances):
    """(N, 2) array of log(w_k) + log N(x; mu_k, var_k)."""
    cols = [
        np.log(weights[k]) + _log_normal_pdf(x, means[k], variances[k])
        for k in range(2)
    ]
    return np.stack(cols, axis=1)


def _mean_log_likelihood(log_dens: np.ndarray) -> float:
    m = log_dens.max(axis=1, keepdims=True)
    return float((m[:, 0] + np.log(np.exp(log_dens - m).sum(axis=1))).mean())


def fit_gmm(
    losses, max_iter: int = 100, tol: float = 1e-6, seed: int | None = None
) -> GmmFit:
    """EM fit of a two-component Gaussian mixture to 1-D values.

    Accepts a LossVector (fits the normalized losses) or a plain array.
    Initialization is deterministic (10th/90th percentile means, equal
    weights, shared sample variance), so `seed` currently has no effect;
    it is accepted for interface stability. Stops when the mean
    log-likelihood improves by less than `tol`.
    """
    x = losses.normalized if isinstance(losses, LossVector) else np.asarray(losses)
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("need at least two values to fit a mixture")
    if np.ptp(x) == 0.0:
        v = float(x[0])
        return GmmFit(
            weights=np.array([0.5, 0.5]),
            means=np.array([v, v]),
            variances=np.array([VARIANCE_FLOOR, VARIANCE_FLOOR]),
            converged=True,
            n_iter=0,
            degenerate=True,
            ll_trace=(),
        )

    means = np.percentile(x, [10.0, 90.0]).astype(np.float64)
    if means[0] == means[1]:
        means = np.array([float(x.min()), float(x.max())])
    variances = np.full(2, max(float(x.var()), VARIANCE_FLOOR))
    weights = np.array([0.5, 0.5])

    trace: list[float] = []
    prev_ll = _mean_log_likelihood(_log_densities(x, weights, means, variances))
    converged = False
    iters = 0
    for iters in range(1, max_iter + 1):
        # E-step: responsibilities in log space.
        log_dens = _log_densities(x, weights, means, variances)
        m = log_dens.max(axis=1, keepdims=True)
        dens = np.exp(log_dens - m)
        resp = dens / dens.sum(axis=1, keepdims=True)

        # M-step with a variance floor against point-mass collapse.
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / x.size
        means = (resp * x[:, None]).sum(axis=0) / nk
        variances = (resp * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / nk
        variances = np.maximum(variances, VARIANCE_FLOOR)

        ll = _mean_log_likelihood(_log_densities(x, weights, means, variances))
        if ll < prev_ll - 1e-9:
            raise RuntimeError(
                f"EM log-likelihood decreased: {prev_ll} -> {ll} at iteration {iters}"
            )
        trace.append(ll)
        if ll - prev_ll < tol:
            converged = True
            prev_ll = ll
            break
        prev_ll = ll

    order = np.argsort(means, kind="stable")
    return GmmFit(
        weights=weights[order],
        means=means[order],
        variances=variances[order],
        converged=converged,
        n_iter=iters,
        degenerate=False,
        ll_trace=tuple(trace),
    )


def posterior_clean(values, fit: GmmFit):
    """Posterior probability of the lower-mean component at each value."""
    x = np.asarray(values, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if fit.degenerate:
        out = np.full(x.shape, 0.5)
    else:
        log_dens = _log_densities(x, fit.weights, fit.means, fit.variances)
        m = log_dens.max(axis=1)
        dens = np.exp(log_dens - m[:, None])
        out = dens[:, 0] / dens.sum(axis=1)
    return float(out[0]) if scalar else out
