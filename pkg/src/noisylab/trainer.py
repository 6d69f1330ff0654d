"""Full training schedule: warm-up, per-epoch loss modeling and cross-wired
division, mixed-set optimization, the label-correction event, and metrics.

Co-teaching wiring: the division consumed by net k is built from the clean
probabilities of the other net's loss model. Both divisions (including
pseudo-labels) are computed from start-of-epoch parameters, then the nets
are updated sequentially. All label reads on the training path go through
the dataset's active channel, which switches from observed to corrected
when the correction event fires; loss modeling and correction predictions
always run on raw features.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import metrics as metrics_mod
from . import reco as reco_mod
from .augment import AugSpec, view_matrices
from .config import RunConfig
from .data import (
    LabeledDataset,
    load_csv,
    make_blobs,
    one_hot_matrix,
    split_last_per_class,
)
from .divide import Division, co_pseudo_label, selection_auc, split
from .lossmodel import fit_gmm, per_sample_losses, posterior_clean
from .metrics import DumpWriter, EpochRecord, RecoEvent
from .mixer import build_mixed_sets
from .net import LossSpec, Mlp, SgdState, backward, sgd_step
from .noise import NoiseFamily, NoiseSpec, inject
from .rng import child_seed, derive_rng

logger = logging.getLogger(__name__)

LR_DECAY_FACTOR = 0.1


@dataclass(frozen=True)
class Schedule:
    """Epoch layout; correction epochs must fall strictly inside training."""

    total_epochs: int
    warmup_epochs: int
    reco_epochs: tuple[int, ...]
    batch_size: int
    lr_decay_epoch: int | None = None

    def __post_init__(self):
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be positive")
        if not 0 <= self.warmup_epochs <= self.total_epochs:
            raise ValueError("warmup_epochs must be in [0, total_epochs]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        for e in self.reco_epochs:
            if not self.warmup_epochs < e < self.total_epochs:
                raise ValueError(
                    "reco epochs must satisfy warmup < epoch < total_epochs"
                )
        if list(self.reco_epochs) != sorted(set(self.reco_epochs)):
            raise ValueError("reco epochs must be strictly increasing")


@dataclass(frozen=True)
class LossWeights:
    """Weights of the unsupervised and regularization terms."""

    lambda_u: float
    lambda_r: float
    prior: np.ndarray | None = None

    def __post_init__(self):
        if self.lambda_u < 0 or self.lambda_r < 0:
            raise ValueError("loss weights must be non-negative")
        if self.prior is not None:
            prior = np.asarray(self.prior, dtype=np.float64)
            if prior.min() < 0 or abs(prior.sum() - 1.0) > 1e-9:
                raise ValueError("prior must be on the simplex")


@dataclass
class RunResult:
    records: list[EpochRecord]
    best_acc: float
    last10_mean_acc: float
    final_auc: float | None
    reco_events: list[tuple[int, RecoEvent]]
    nets: tuple[Mlp, Mlp]
    train_dataset: LabeledDataset


@dataclass
class _TermMeter:
    """Unweighted mean of a loss term over the batches where it applied."""

    total: float = 0.0
    count: int = 0

    def add(self, value: float, applies: bool = True):
        if applies:
            self.total += value
            self.count += 1

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0


def evaluate(nets: tuple[Mlp, Mlp], test_dataset: LabeledDataset) -> float:
    """Two-net average accuracy on raw views of a held-out set."""
    if len(test_dataset) == 0:
        raise ValueError("test dataset is empty")
    return metrics_mod.accuracy(nets, test_dataset, channel="true")


def build_datasets(cfg: RunConfig) -> tuple[LabeledDataset, LabeledDataset | None]:
    """Training set (with injected noise) and clean test set from config."""
    if cfg.dataset_kind == "blobs":
        full = make_blobs(
            cfg.num_classes,
            cfg.per_class + cfg.test_per_class,
            cfg.dim,
            cfg.separation,
            cfg.noise_sigma,
            child_seed(cfg.seed, "data", "blobs"),
        )
        train_clean, test = split_last_per_class(full, cfg.test_per_class)
    else:
        override = cfg.num_classes if cfg.num_classes > 0 else None
        train_clean = load_csv(cfg.dataset_path, num_classes=override)
        test = None
        if cfg.dataset_test_path:
            test = load_csv(cfg.dataset_test_path, num_classes=train_clean.num_classes)

    family = NoiseFamily(cfg.noise_family)
    mapping = dict(cfg.noise_mapping) if family is NoiseFamily.ASYMMETRIC else None
    spec = NoiseSpec(family, cfg.noise_eta, train_clean.num_classes, mapping)
    train = inject(train_clean, spec, child_seed(cfg.seed, "noise", "inject"))
    return train, test


class Trainer:
    """Runs one experiment; see `run` at module level for the plain entry."""

    def __init__(
        self,
        cfg: RunConfig,
        train_ds: LabeledDataset,
        test_ds: LabeledDataset,
        record_hook=None,
        dump_writer: DumpWriter | None = None,
        epoch_end_hook=None,
    ):
        if test_ds is None or len(test_ds) == 0:
            raise ValueError("a non-empty test dataset is required")
        self.cfg = cfg
        self.train_ds = train_ds
        self.test_ds = test_ds
        self.record_hook = record_hook
        self.dump = dump_writer
        self.epoch_end_hook = epoch_end_hook

        use_reco = cfg.reco_enabled and cfg.method == "full"
        self.schedule = Schedule(
            total_epochs=cfg.total_epochs,
            warmup_epochs=cfg.warmup_epochs,
            reco_epochs=tuple(cfg.reco_epochs) if use_reco else (),
            batch_size=cfg.batch_size,
            lr_decay_epoch=cfg.lr_decay_epoch or None,
        )
        self.weights = LossWeights(cfg.lambda_u, cfg.lambda_r)
        widths = cfg.widths() if cfg.dataset_kind == "blobs" else (
            train_ds.dim,
            *cfg.hidden,
            train_ds.num_classes,
        )
        self.nets = tuple(
            Mlp.initialize(widths, derive_rng(cfg.seed, "net", k)) for k in (0, 1)
        )
        self.states = [
            SgdState.for_net(net, cfg.lr, cfg.momentum, cfg.weight_decay)
            for net in self.nets
        ]
        feature_scale = float(np.mean(train_ds.features.std(axis=0)))
        self.augspec = AugSpec(
            weak_sigma=cfg.aug_weak_sigma * feature_scale,
            strong_sigma=cfg.aug_strong_sigma * feature_scale,
            strong_mask_prob=cfg.aug_mask_prob,
        )
        self.reco_events: list[tuple[int, RecoEvent]] = []
        self.records: list[EpochRecord] = []

    # ----- epoch phases -------------------------------------------------

    def _batches(self, n_items: int, rng) -> list[np.ndarray]:
        order = rng.permutation(n_items)
        bs = self.schedule.batch_size
        return [order[i : i + bs] for i in range(0, n_items, bs)]

    def _plain_epoch(self, epoch: int) -> tuple[float, float, float]:
        """All-data cross-entropy training; used for warm-up and the plain
        supervised baseline arm."""
        ds = self.train_ds
        targets = one_hot_matrix(ds.training_labels, ds.num_classes)
        meter = _TermMeter()
        for k in (0, 1):
            rng = derive_rng(self.cfg.seed, "warmup", epoch, k)
            for batch in self._batches(len(ds), rng):
                spec = LossSpec(supervised=np.ones(len(batch), dtype=bool))
                grads, parts = backward(
                    self.nets[k], ds.features[batch], targets[batch], spec
                )
                sgd_step(self.nets[k], grads, self.states[k])
                meter.add(parts.supervised)
        return meter.mean, 0.0, 0.0

    def _apply_reco(self, epoch: int) -> RecoEvent:
        ds = self.train_ds
        predictions = metrics_mod.ensemble_probs(self.nets[0], self.nets[1], ds.features)
        corrected = reco_mod.correct(ds, predictions, self.cfg.reco_tau_ps)
        stats = reco_mod.reco_metrics(corrected, ds)
        self.train_ds = ds.with_corrected(corrected.corrected_labels)
        event = RecoEvent(self.cfg.reco_tau_ps, stats.size, stats.precision)
        self.reco_events.append((epoch, event))
        logger.info(
            "epoch %d: corrected %d labels at tau_ps=%.3g", epoch, stats.size,
            self.cfg.reco_tau_ps,
        )
        return event

    def _pipeline_epoch(self, epoch: int):
        reco_event = None
        if epoch in self.schedule.reco_epochs:
            reco_event = self._apply_reco(epoch)
        ds = self.train_ds
        channel = ds.active_channel

        # Loss modeling per net, on raw features against the active channel.
        loss_vectors = []
        p_clean = []
        for k in (0, 1):
            lv = per_sample_losses(self.nets[k], ds, channel)
            fit = fit_gmm(lv)
            loss_vectors.append(lv)
            p_clean.append(posterior_clean(lv.normalized, fit))

        truly_clean = ds.labels(channel) == ds.eval_true_labels
        aucs = [selection_auc(p_clean[k], truly_clean) for k in (0, 1)]
        if self.dump is not None:
            for k in (0, 1):
                self.dump.write_losses(
                    epoch, k, loss_vectors[k].raw, loss_vectors[k].normalized, p_clean[k]
                )
                self.dump.write_division(
                    epoch, k, p_clean[k], p_clean[k] >= self.cfg.tau_c, truly_clean
                )

        # Start-of-epoch divisions, cross-wired, pseudo-labels from weak views.
        divisions: list[Division] = []
        views = []
        for k in (0, 1):
            div = split(ds, p_clean[1 - k], self.cfg.tau_c, channel, source_net=1 - k)
            w1, w2, strong_view = view_matrices(
                ds.features, self.augspec, derive_rng(self.cfg.seed, "haug", epoch, k)
            )
            pseudo = co_pseudo_label(
                self.nets[0], self.nets[1], ds, div.noisy_ids, features=w1
            )
            divisions.append(div.with_pseudo(pseudo))
            views.append((w2, strong_view))

        parts = [
            self._train_one_net(k, divisions[k], views[k], epoch) for k in (0, 1)
        ]
        loss_x = float(np.mean([p[0] for p in parts]))
        loss_u = float(np.mean([p[1] for p in parts]))
        loss_reg = float(np.mean([p[2] for p in parts]))
        clean_sizes = [len(divisions[k].clean_ids) for k in (0, 1)]
        return loss_x, loss_u, loss_reg, clean_sizes, aucs, reco_event

    def _train_one_net(self, k: int, division: Division, views, epoch: int):
        if division.source_net != 1 - k:
            raise AssertionError(
                f"net {k} must consume the division sourced from net {1 - k}"
            )
        w2, strong_view = views
        first = w2.copy()
        if self.cfg.aug_strong_enabled and len(division.noisy_ids):
            first[division.noisy_ids] = strong_view[division.noisy_ids]
        mixed_clean, mixed_noisy = build_mixed_sets(
            division,
            self.cfg.mix_alpha,
            derive_rng(self.cfg.seed, "mix", epoch, k),
            features=first,
            partner_features=w2,
            fold_lambda=self.cfg.fold_lambda,
        )
        if len(mixed_clean) == 0:
            logger.warning(
                "epoch %d net %d: clean set is empty; training with the "
                "unsupervised and regularization terms only", epoch, k + 1,
            )
        inputs = np.concatenate([mixed_clean.inputs, mixed_noisy.inputs])
        targets = np.concatenate([mixed_clean.targets, mixed_noisy.targets])
        supervised = np.concatenate(
            [np.ones(len(mixed_clean), dtype=bool), np.zeros(len(mixed_noisy), dtype=bool)]
        )

        x_meter, u_meter, r_meter = _TermMeter(), _TermMeter(), _TermMeter()
        rng = derive_rng(self.cfg.seed, "batch", epoch, k)
        for batch in self._batches(len(inputs), rng):
            spec = LossSpec(
                supervised=supervised[batch],
                lambda_u=self.weights.lambda_u,
                lambda_r=self.weights.lambda_r,
                prior=self.weights.prior,
            )
            grads, parts = backward(self.nets[k], inputs[batch], targets[batch], spec)
            sgd_step(self.nets[k], grads, self.states[k])
            x_meter.add(parts.supervised, applies=bool(supervised[batch].any()))
            u_meter.add(parts.unsupervised, applies=bool((~supervised[batch]).any()))
            r_meter.add(parts.regularization)
        return x_meter.mean, u_meter.mean, r_meter.mean

    # ----- top level ------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        n = len(self.train_ds)
        for epoch in range(1, self.schedule.total_epochs + 1):
            if self.schedule.lr_decay_epoch == epoch:
                for state in self.states:
                    state.learning_rate *= LR_DECAY_FACTOR
            plain = cfg.method == "plain" or epoch <= self.schedule.warmup_epochs
            if plain:
                loss_x, loss_u, loss_reg = self._plain_epoch(epoch)
                clean_sizes = [n, n]
                aucs = [None, None]
                reco_event = None
            else:
                loss_x, loss_u, loss_reg, clean_sizes, aucs, reco_event = (
                    self._pipeline_epoch(epoch)
                )
            test_acc = evaluate(self.nets, self.test_ds)
            record = EpochRecord(
                epoch=epoch,
                loss_x=loss_x,
                loss_u=loss_u,
                loss_reg=loss_reg,
                clean_size_net1=clean_sizes[0],
                clean_size_net2=clean_sizes[1],
                auc_net1=aucs[0],
                auc_net2=aucs[1],
                test_acc=test_acc,
                reco_event=reco_event,
            )
            self.records.append(record)
            if self.record_hook is not None:
                self.record_hook(record)
            if self.epoch_end_hook is not None:
                self.epoch_end_hook(epoch, self.nets)
            logger.info(
                "epoch %d: test_acc=%.4f clean_sizes=%d/%d",
                epoch, test_acc, clean_sizes[0], clean_sizes[1],
            )

        accs = [r.test_acc for r in self.records]
        last = accs[-10:] if len(accs) >= 10 else accs
        final_aucs = [a for a in (self.records[-1].auc_net1, self.records[-1].auc_net2) if a is not None]
        return RunResult(
            records=self.records,
            best_acc=float(max(accs)),
            last10_mean_acc=float(np.mean(last)),
            final_auc=float(np.mean(final_aucs)) if final_aucs else None,
            reco_events=self.reco_events,
            nets=self.nets,
            train_dataset=self.train_ds,
        )


def warmup(
    nets: tuple[Mlp, Mlp],
    dataset: LabeledDataset,
    epochs: int,
    states: list[SgdState],
    batch_size: int,
    seed: int,
) -> tuple[Mlp, Mlp]:
    """Standalone all-data cross-entropy phase over both nets.

    Each net gets its own shuffle stream per epoch; zero epochs leaves the
    parameters untouched.
    """
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    targets = one_hot_matrix(dataset.training_labels, dataset.num_classes)
    for epoch in range(1, epochs + 1):
        for k in (0, 1):
            rng = derive_rng(seed, "warmup", epoch, k)
            order = rng.permutation(len(dataset))
            for i in range(0, len(dataset), batch_size):
                batch = order[i : i + batch_size]
                spec = LossSpec(supervised=np.ones(len(batch), dtype=bool))
                grads, _ = backward(
                    nets[k], dataset.features[batch], targets[batch], spec
                )
                sgd_step(nets[k], grads, states[k])
    return nets


def run(
    cfg: RunConfig,
    record_hook=None,
    dump_writer: DumpWriter | None = None,
    epoch_end_hook=None,
    datasets: tuple[LabeledDataset, LabeledDataset] | None = None,
) -> RunResult:
    """Build datasets from config (unless given) and execute the schedule."""
    train_ds, test_ds = datasets if datasets is not None else build_datasets(cfg)
    if test_ds is None:
        raise ValueError("this run needs a test set (dataset.test_path for csv)")
    trainer = Trainer(
        cfg,
        train_ds,
        test_ds,
        record_hook=record_hook,
        dump_writer=dump_writer,
        epoch_end_hook=epoch_end_hook,
    )
    return trainer.run()
