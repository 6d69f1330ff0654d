"""noisylab: a desk-scale laboratory for learning with noisy labels.

Pipeline pieces: synthetic datasets and label-noise injection, a compact
MLP with hand-written backpropagation, per-sample loss modeling with a
two-component Gaussian mixture, cross-wired clean/noisy division with
pseudo-labels, mixed-set semi-supervised training, hybrid weak/strong
feature augmentation, and confidence-thresholded label correction with an
exhaustive verifier for its safety bound.
"""

__version__ = "0.1.0"

from .augment import AugSpec, paired_views, raw, strong, weak
from .config import ConfigError, RunConfig, default_config, load_config
from .data import (
    LabeledDataset,
    Sample,
    load_csv,
    make_blobs,
    one_hot,
    save_csv,
    split_last_per_class,
)
from .divide import Division, co_pseudo_label, selection_auc, split
from .lossmodel import GmmFit, LossVector, fit_gmm, per_sample_losses, posterior_clean
from .metrics import EpochRecord, MetricsSink, RecoEvent, accuracy, relabel_export
from .mixer import MixedBatch, build_mixed_sets, interpolate, sample_beta
from .net import (
    Mlp,
    SgdState,
    backward,
    combined_loss,
    load_checkpoint,
    loss_ce,
    loss_mse,
    loss_reg,
    save_checkpoint,
    sgd_step,
)
from .noise import NoiseFamily, NoiseReport, NoiseSpec, expected_transition, inject, measure
from .reco import (
    CorrectedDataset,
    DiscreteNoisyWorld,
    correct,
    random_world,
    reco_metrics,
    theorem1_bound,
    verify_many,
    verify_theorem1,
    world_from_rates,
)
from .trainer import LossWeights, RunResult, Schedule, Trainer, evaluate, run
