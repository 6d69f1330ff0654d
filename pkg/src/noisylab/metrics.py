"""Evaluation quantities and the per-epoch metrics CSV.

The CSV schema is fixed. Optional values use two sentinels: an empty cell
means the quantity did not apply this epoch (no correction event), and
``NA`` means it applied but is undefined (empty relabeled set, or an AUC
with a single-class ground truth).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import reco
from .data import LabeledDataset
from .net import Mlp

CSV_COLUMNS = (
    "epoch",
    "loss_x",
    "loss_u",
    "loss_reg",
    "clean_size_net1",
    "clean_size_net2",
    "clean_size_mean",
    "auc_net1",
    "auc_net2",
    "test_acc",
    "reco_tau",
    "reco_size",
    "reco_precision",
)


@dataclass(frozen=True)
class RecoEvent:
    tau_ps: float
    size: int
    precision: float | None


@dataclass(frozen=True)
class EpochRecord:
    """One epoch's worth of tracked quantities."""

    epoch: int
    loss_x: float
    loss_u: float
    loss_reg: float
    clean_size_net1: int
    clean_size_net2: int
    auc_net1: float | None
    auc_net2: float | None
    test_acc: float
    reco_event: RecoEvent | None = None

    @property
    def clean_size_mean(self) -> float:
        return 0.5 * (self.clean_size_net1 + self.clean_size_net2)


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def record_to_row(record: EpochRecord) -> list[str]:
    row = [
        _fmt(record.epoch),
        _fmt(record.loss_x),
        _fmt(record.loss_u),
        _fmt(record.loss_reg),
        _fmt(record.clean_size_net1),
        _fmt(record.clean_size_net2),
        _fmt(record.clean_size_mean),
        _fmt(record.auc_net1),
        _fmt(record.auc_net2),
        _fmt(record.test_acc),
    ]
    if record.reco_event is None:
        row += ["", "", ""]
    else:
        ev = record.reco_event
        row += [_fmt(ev.tau_ps), _fmt(ev.size), _fmt(ev.precision)]
    return row


class MetricsSink:
    """Append-only CSV writer; the header is written once and every row is
    flushed immediately so an aborted run keeps all completed rows."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_COLUMNS)
        self._fh.flush()

    def emit(self, record: EpochRecord) -> None:
        self._writer.writerow(record_to_row(record))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def emit_epoch(record: EpochRecord, sink: MetricsSink) -> None:
    sink.emit(record)


def _parse_optional(cell: str) -> float | None:
    return None if cell == "NA" else float(cell)


def read_metrics_csv(path) -> list[EpochRecord]:
    """Inverse of the sink, for round-trip checks and post-hoc analysis."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected metrics header: {header}")
        for row in reader:
            event = None
            if row[10] != "":
                precision = None if row[12] == "NA" else float(row[12])
                event = RecoEvent(float(row[10]), int(row[11]), precision)
            records.append(
                EpochRecord(
                    epoch=int(row[0]),
                    loss_x=float(row[1]),
                    loss_u=float(row[2]),
                    loss_reg=float(row[3]),
                    clean_size_net1=int(row[4]),
                    clean_size_net2=int(row[5]),
                    auc_net1=_parse_optional(row[7]),
                    auc_net2=_parse_optional(row[8]),
                    test_acc=float(row[9]),
                    reco_event=event,
                )
            )
    return records


def ensemble_probs(net_a: Mlp, net_b: Mlp, features: np.ndarray) -> np.ndarray:
    return 0.5 * (net_a.forward(features) + net_b.forward(features))


def accuracy(
    nets: tuple[Mlp, Mlp], dataset: LabeledDataset, channel: str = "true"
) -> float:
    """Argmax-match fraction of the two-net average prediction against a
    label channel ('true', 'observed' or 'corrected')."""
    probs = ensemble_probs(nets[0], nets[1], dataset.features)
    predicted = probs.argmax(axis=1)
    if channel == "true":
        labels = dataset.eval_true_labels
    else:
        labels = dataset.labels(channel)
    return float((predicted == labels).mean())


def relabel_export(
    net_a: Mlp, net_b: Mlp, dataset: LabeledDataset, tau_ps: float
) -> tuple[LabeledDataset, reco.RecoMetrics]:
    """Correct the dataset with the trained pair and export the result.

    The returned dataset carries the revised labels as its observed
    channel (true labels are preserved for evaluation), ready to be saved
    and retrained on from scratch.
    """
    predictions = ensemble_probs(net_a, net_b, dataset.features)
    corrected = reco.correct(dataset, predictions, tau_ps)
    stats = reco.reco_metrics(corrected, dataset)
    exported = LabeledDataset(
        dataset.features,
        dataset.eval_true_labels,
        corrected.corrected_labels,
        dataset.num_classes,
    )
    return exported, stats


class DumpWriter:
    """Config-gated per-epoch CSV dumps for post-hoc plotting."""

    def __init__(self, directory, losses: bool = False, division: bool = False):
        self.directory = directory
        self.losses = losses
        self.division = division

    def write_losses(self, epoch, net_index, raw, normalized, p_clean):
        if not self.losses:
            return
        path = self.directory / f"losses_net{net_index + 1}_epoch{epoch}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "raw_loss", "norm_loss", "p_clean"])
            for i in range(len(raw)):
                writer.writerow(
                    [i, repr(float(raw[i])), repr(float(normalized[i])), repr(float(p_clean[i]))]
                )

    def write_division(self, epoch, net_index, p_clean, is_clean_pred, is_clean_true):
        if not self.division:
            return
        path = self.directory / f"division_net{net_index + 1}_epoch{epoch}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "p_clean", "is_clean_pred", "is_clean_true"])
            for i in range(len(p_clean)):
                writer.writerow(
                    [
                        i,
                        repr(float(p_clean[i])),
                        int(is_clean_pred[i]),
                        int(is_clean_true[i]),
                    ]
                )
