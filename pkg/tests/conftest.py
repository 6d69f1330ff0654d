"""Shared fixtures: the desk-scale experiment arms used by the trainer,
metrics, and acceptance tests. Each arm trains once per session."""

import logging
import time
from dataclasses import dataclass

import pytest

import noisylab as nl

logging.getLogger("noisylab").setLevel(logging.ERROR)

DESK_SEED = 3

# Criterion-scale setup: 4 blob classes in 16-d, 1000 train + 250 test per
# class, 80% symmetric noise, 60 epochs with correction at 30. Geometry is
# calibrated so clean-label training reaches >= 98% while the noisy problem
# stays non-trivial.
DESK_OVERRIDES = {
    "run.seed": DESK_SEED,
    "sched.lr_decay_epoch": 45,
}


def desk_config(**extra) -> nl.RunConfig:
    overrides = dict(DESK_OVERRIDES)
    overrides.update(extra)
    return nl.default_config(**overrides)


@dataclass
class DeskRun:
    result: nl.RunResult
    config: nl.RunConfig
    seconds: float


def _train(**extra) -> DeskRun:
    cfg = desk_config(**extra)
    start = time.perf_counter()
    result = nl.run(cfg)
    return DeskRun(result, cfg, time.perf_counter() - start)


@pytest.fixture(scope="session")
def desk_full() -> DeskRun:
    """Full pipeline: selection + mixed training + correction + strong aug."""
    return _train()


@pytest.fixture(scope="session")
def desk_plain() -> DeskRun:
    """Plain cross-entropy baseline; same net, same schedule, no pipeline."""
    return _train(**{"train.method": "plain"})


@pytest.fixture(scope="session")
def desk_noreco() -> DeskRun:
    """Pipeline arm with label correction disabled."""
    return _train(**{"reco.enabled": False})


@pytest.fixture(scope="session")
def desk_nostrong() -> DeskRun:
    """Pipeline arm with correction on but strong augmentation off."""
    return _train(**{"aug.strong_enabled": False})


@pytest.fixture(scope="session")
def desk_clean_ceiling() -> DeskRun:
    """Noise-free plain training; establishes the clean-label ceiling."""
    return _train(**{
        "noise.eta": 0.0,
        "train.method": "plain",
        "sched.total_epochs": 20,
        "sched.lr_decay_epoch": 15,
    })
