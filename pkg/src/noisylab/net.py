"""Feed-forward softmax classifier with hand-derived backpropagation.

The training objective combines three terms over a minibatch:

* supervised cross-entropy, averaged over the batch items flagged as
  supervised (soft targets allowed);
* squared-error consistency, averaged over the remaining items and
  weighted by ``lambda_u``;
* a prior-matching penalty KL(prior || mean batch output) weighted by
  ``lambda_r``, which couples all items through the batch-mean output.

`backward` returns the exact analytic gradient of that combined scalar,
including the coupling through the mean output, so it can be checked
against central finite differences of `combined_loss`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_FLOOR = 1e-12

CHECKPOINT_HEADER = "LCB-NET-1"


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def glorot_limits(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


class Mlp:
    """ReLU MLP with a softmax head. Layer widths are [d, h1, ..., C]."""

    def __init__(self, widths, weights, biases):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError("widths must list at least input and output sizes")
        if len(weights) != len(widths) - 1 or len(biases) != len(widths) - 1:
            raise ValueError("parameter count does not match widths")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (widths[i], widths[i + 1]) or b.shape != (widths[i + 1],):
                raise ValueError(f"layer {i} parameter shapes do not match widths")
        self.widths = widths
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @classmethod
    def initialize(cls, widths, seed) -> "Mlp":
        """Seeded uniform Glorot initialization, zero biases."""
        rng = np.random.default_rng(seed) if isinstance(seed, int) else seed
        widths = tuple(int(w) for w in widths)
        weights = []
        biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            limit = glorot_limits(fan_in, fan_out)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(widths, weights, biases)

    @property
    def num_classes(self) -> int:
        return self.widths[-1]

    @property
    def dim(self) -> int:
        return self.widths[0]

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Mlp":
        return Mlp(
            self.widths,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def _trace(self, x: np.ndarray):
        """Forward pass keeping activations; x is (B, d)."""
        activations = [x]
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = softmax(z) if i == last else np.maximum(z, 0.0)
            activations.append(a)
        return activations, pre

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities for a single vector (d,) or a batch (B, d)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"input dimension {x.shape[-1]} != {self.dim}")
        probs = self._trace(x)[0][-1]
        return probs[0] if single else probs


def loss_ce(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy with soft targets; probabilities floored at 1e-12."""
    predictions, targets = _check_batch(predictions, targets)
    logp = np.log(np.maximum(predictions, LOG_FLOOR))
    return float(-(targets * logp).sum(axis=1).mean())


def loss_mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared Euclidean distance between targets and predictions."""
    predictions, targets = _check_batch(predictions, targets)
    return float(((targets - predictions) ** 2).sum(axis=1).mean())


def loss_reg(mean_output: np.ndarray, prior: np.ndarray) -> float:
    """KL(prior || mean_output); zero iff the mean output matches the prior."""
    mean_output = np.asarray(mean_output, dtype=np.float64)
    prior = np.asarray(prior, dtype=np.float64)
    if mean_output.shape != prior.shape:
        raise ValueError("mean_output and prior must have matching shapes")
    safe = np.maximum(mean_output, LOG_FLOOR)
    mask = prior > 0
    return float((prior[mask] * np.log(prior[mask] / safe[mask])).sum())


def _check_batch(predictions, targets):
    predictions = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if predictions.shape != targets.shape:
        raise ValueError("prediction and target batches must match")
    return predictions, targets


@dataclass(frozen=True)
class LossSpec:
    """Which loss terms a batch contributes and with what weights.

    `supervised` flags the cross-entropy items; the rest take the
    squared-error term. Items are coupled through the regularization term
    whenever lambda_r > 0.
    """

    supervised: np.ndarray
    lambda_u: float = 0.0
    lambda_r: float = 0.0
    prior: np.ndarray | None = None


@dataclass(frozen=True)
class LossParts:
    supervised: float
    unsupervised: float
    regularization: float

    @property
    def total(self) -> float:
        return self.supervised + self.unsupervised + self.regularization


def _split_masks(spec: LossSpec, batch_size: int):
    sup = np.asarray(spec.supervised, dtype=bool)
    if sup.shape != (batch_size,):
        raise ValueError("supervised mask must have one flag per batch item")
    return sup, ~sup


def combined_loss(
    net: Mlp, inputs: np.ndarray, targets: np.ndarray, spec: LossSpec
) -> LossParts:
    """Evaluate the combined objective; the reference for `backward`."""
    probs = net.forward(inputs)
    probs, targets = _check_batch(probs, targets)
    sup, unsup = _split_masks(spec, probs.shape[0])
    l_x = loss_ce(probs[sup], targets[sup]) if sup.any() else 0.0
    l_u = (
        spec.lambda_u * loss_mse(probs[unsup], targets[unsup]) if unsup.any() else 0.0
    )
    l_r = 0.0
    if spec.lambda_r > 0.0:
        prior = _prior_for(spec, net.num_classes)
        l_r = spec.lambda_r * loss_reg(probs.mean(axis=0), prior)
    return LossParts(l_x, l_u, l_r)


def _prior_for(spec: LossSpec, num_classes: int) -> np.ndarray:
    if spec.prior is None:
        return np.full(num_classes, 1.0 / num_classes)
    prior = np.asarray(spec.prior, dtype=np.float64)
    if prior.shape != (num_classes,):
        raise ValueError("prior must be a length-C vector")
    return prior


def backward(net: Mlp, inputs: np.ndarray, targets: np.ndarray, spec: LossSpec):
    """Analytic gradients of the combined loss for every parameter.

    Returns ``(grads, parts)`` where grads is a list of (dW, db) pairs in
    layer order. The softmax Jacobian is applied to the full dL/dp vector,
    so the clamp in the log terms is respected exactly.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    b = x.shape[0]
    sup, unsup = _split_masks(spec, b)
    activations, pre = net._trace(x)
    probs = activations[-1]

    # dL/dp per item, assembling all three terms.
    g = np.zeros_like(probs)
    n_sup = int(sup.sum())
    if n_sup:
        safe = np.maximum(probs[sup], LOG_FLOOR)
        grad_ce = np.where(probs[sup] >= LOG_FLOOR, -targets[sup] / safe, 0.0)
        g[sup] += grad_ce / n_sup
    n_unsup = int(unsup.sum())
    if n_unsup and spec.lambda_u != 0.0:
        g[unsup] += spec.lambda_u * 2.0 * (probs[unsup] - targets[unsup]) / n_unsup
    l_r = 0.0
    if spec.lambda_r > 0.0:
        prior = _prior_for(spec, net.num_classes)
        mean_out = probs.mean(axis=0)
        safe_mean = np.maximum(mean_out, LOG_FLOOR)
        grad_mean = np.where(mean_out >= LOG_FLOOR, -prior / safe_mean, 0.0)
        g += spec.lambda_r * grad_mean[None, :] / b
        l_r = spec.lambda_r * loss_reg(mean_out, prior)

    # Softmax Jacobian-vector product: dz_j = p_j * (g_j - sum_c g_c p_c).
    dz = probs * (g - (g * probs).sum(axis=1, keepdims=True))

    grads = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        grads[layer] = (activations[layer].T @ dz, dz.sum(axis=0))
        if layer > 0:
            da = dz @ net.weights[layer].T
            dz = da * (pre[layer - 1] > 0.0)

    l_x = loss_ce(probs[sup], targets[sup]) if n_sup else 0.0
    l_u = spec.lambda_u * loss_mse(probs[unsup], targets[unsup]) if n_unsup else 0.0
    return grads, LossParts(l_x, l_u, l_r)


@dataclass
class SgdState:
    """SGD with momentum; weight decay is folded into the raw gradient."""

    learning_rate: float
    momentum: float
    weight_decay: float
    velocities: list

    @classmethod
    def for_net(cls, net: Mlp, learning_rate, momentum=0.0, weight_decay=0.0):
        velocities = [
            (np.zeros_like(w), np.zeros_like(b))
            for w, b in zip(net.weights, net.biases)
        ]
        return cls(learning_rate, momentum, weight_decay, velocities)


def sgd_step(net: Mlp, grads, state: SgdState) -> Mlp:
    """v <- momentum*v + g + wd*theta; theta <- theta - lr*v. In place."""
    for layer, (gw, gb) in enumerate(grads):
        vw, vb = state.velocities[layer]
        vw *= state.momentum
        vw += gw + state.weight_decay * net.weights[layer]
        vb *= state.momentum
        vb += gb + state.weight_decay * net.biases[layer]
        net.weights[layer] -= state.learning_rate * vw
        net.biases[layer] -= state.learning_rate * vb
    return net


def save_checkpoint(net: Mlp, path) -> None:
    """Versioned text dump: widths, then row-major parameters per layer,
    written with shortest round-trip decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CHECKPOINT_HEADER + "\n")
        fh.write("widths " + " ".join(str(w) for w in net.widths) + "\n")
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            fh.write(f"W{i} " + " ".join(repr(float(v)) for v in w.ravel()) + "\n")
            fh.write(f"b{i} " + " ".join(repr(float(v)) for v in b) + "\n")


def load_checkpoint(path) -> Mlp:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_HEADER:
        raise ValueError(f"not a {CHECKPOINT_HEADER} checkpoint: {path}")
    if len(lines) < 2 or not lines[1].startswith("widths "):
        raise ValueError("checkpoint is missing the widths line")
    widths = [int(v) for v in lines[1].split()[1:]]
    weights = []
    biases = []
    expected = 2 * (len(widths) - 1)
    body = lines[2:]
    if len(body) != expected:
        raise ValueError(f"expected {expected} parameter lines, got {len(body)}")
    for i in range(len(widths) - 1):
        wline = body[2 * i].split()
        bline = body[2 * i + 1].split()
        if wline[0] != f"W{i}" or bline[0] != f"b{i}":
            raise ValueError(f"unexpected parameter labels at layer {i}")
        w = np.array([float(v) for v in wline[1:]]).reshape(widths[i], widths[i + 1])
        b = np.array([float(v) for v in bline[1:]])
        weights.append(w)
        biases.append(b)
    return Mlp(widths, weights, biases)
