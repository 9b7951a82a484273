"""
Network sensitivity by silencing.

Each channel in turn is set to zero in every evaluation window (input and
reconstruction target alike) and the forecaster's masked reconstruction
loss is recomputed. The percentage change against the unperturbed loss,
per class, measures how much the model relies on that network.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.config import WindowConfig
from src.data import CHANNELS, Cohort, Domain, Label
from src.errors import DataValidationError, MissingArtifactError
from src.forecast import Forecaster
from src.windows import WindowBatch, slide_cohort, split_windows

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["class", "channel_index", "domain", "delta_percent", "rank"]


def silence_channel(batch: WindowBatch, index: int) -> WindowBatch:
    """Copy of ``batch`` with channel ``index`` zeroed at every position of every window."""
    if not 0 <= index < batch.n_channels:
        raise DataValidationError(f"channel index {index} out of range 0..{batch.n_channels - 1}")
    windows = batch.windows.copy()
    windows[:, index, :] = 0.0
    return batch.with_windows(windows)


def window_losses(forecaster: Forecaster, batch: WindowBatch, batch_size: int = 256) -> np.ndarray:
    """Masked-position MSE of every window, in batch order."""
    windows = batch.time_major()
    context_len = forecaster.context_len
    losses = []
    for start in range(0, len(batch), batch_size):
        chunk = windows[start:start + batch_size]
        diff = forecaster.forecast(chunk) - chunk[:, context_len:, :]
        losses.append((diff * diff).mean(axis=(1, 2)))
    return np.concatenate(losses) if losses else np.zeros(0)


def delta_percent(baseline: float, perturbed: float) -> float:
    if perturbed == baseline:
        return 0.0
    return 100.0 * (perturbed - baseline) / baseline


@dataclass
class ClassSensitivity:
    """Baseline and per-channel perturbed losses of one class."""
    label: Label
    baseline_loss: float
    perturbed_losses: np.ndarray
    n_windows: int

    @property
    def deltas(self) -> np.ndarray:
        return np.array([delta_percent(self.baseline_loss, float(p)) for p in self.perturbed_losses])

    def ranks(self) -> np.ndarray:
        """1-based rank of each channel: descending delta, ties by ascending index."""
        order = np.lexsort((np.arange(len(self.perturbed_losses)), -self.deltas))
        ranks = np.empty(len(order), dtype=np.int64)
        ranks[order] = np.arange(1, len(order) + 1)
        return ranks

    def to_dict(self) -> dict:
        return {
            "class": self.label.value,
            "baseline_loss": self.baseline_loss,
            "n_windows": self.n_windows,
            "deltas": self.deltas.tolist(),
        }


def batch_sensitivity(
    forecaster: Forecaster,
    batch: WindowBatch,
    label: Label,
    batch_size: int = 256,
    threads: int = 1,
) -> ClassSensitivity:
    """
    Sensitivity of one class over the windows of ``batch`` carrying that label.

    Raises:
        MissingArtifactError: the forecaster is untrained
        DataValidationError: no window of the class, or zero baseline loss
    """
    if not forecaster.trained:
        raise MissingArtifactError("trained forecaster checkpoint", "train-forecaster")
    if batch.labels is None:
        raise DataValidationError("window batch carries no class labels")
    selected = batch.take(np.flatnonzero(batch.labels == label.positive))
    if len(selected) == 0:
        raise DataValidationError(f"class {label.value} has no evaluation windows")

    baseline = float(window_losses(forecaster, selected, batch_size).mean())
    if not baseline > 0:
        raise DataValidationError(f"class {label.value}: baseline loss {baseline} must be positive")

    def perturbed(index: int) -> float:
        return float(window_losses(forecaster, silence_channel(selected, index), batch_size).mean())

    with ThreadPoolExecutor(max_workers=threads) as pool:
        losses = np.array(list(pool.map(perturbed, range(selected.n_channels))))
    logger.info(f"Class {label.value}: baseline loss {baseline:.6f} over {len(selected)} windows")
    return ClassSensitivity(label, baseline, losses, len(selected))


def class_sensitivity(
    forecaster: Forecaster,
    cohort: Cohort,
    label: Label,
    windows: WindowConfig | None = None,
    batch_size: int = 256,
) -> ClassSensitivity:
    """Sensitivity of ``label`` over all sliding windows of that class's records."""
    windows = windows or WindowConfig()
    members = cohort.by_label(label)
    if len(members) == 0:
        raise DataValidationError(f"cohort has no {label.value} subjects")
    batch = slide_cohort(members, windows.window, windows.step, windows.context_len)
    return batch_sensitivity(forecaster, batch, label, batch_size)


@dataclass
class SensitivityTable:
    """Per-class sensitivities; one row per (class, channel) when flattened."""
    classes: dict[Label, ClassSensitivity] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for label in Label:
            entry = self.classes.get(label)
            if entry is None:
                continue
            for index, (delta, rank) in enumerate(zip(entry.deltas, entry.ranks())):
                rows.append({
                    "class": label.value,
                    "channel_index": index,
                    "domain": CHANNELS[index].domain.value,
                    "delta_percent": float(delta),
                    "rank": int(rank),
                })
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)

    def domain_frame(self) -> pd.DataFrame:
        """Mean delta per class and functional domain."""
        frame = self.to_frame()
        order = {d.value: i for i, d in enumerate(Domain)}
        grouped = (
            frame.groupby(["class", "domain"], sort=False)["delta_percent"]
            .agg(mean_delta_percent="mean", n_channels="count")
            .reset_index()
        )
        grouped["_order"] = grouped["domain"].map(order)
        grouped["_class"] = grouped["class"].map({l.value: i for i, l in enumerate(Label)})
        return grouped.sort_values(["_class", "_order"]).drop(columns=["_order", "_class"]).reset_index(drop=True)

    def to_dict(self) -> dict:
        return {label.value: entry.to_dict() for label, entry in self.classes.items()}


def sensitivity_table(
    forecaster: Forecaster,
    batch: WindowBatch,
    batch_size: int = 256,
    threads: int = 1,
) -> SensitivityTable:
    """Sensitivities of both classes over a labelled evaluation batch."""
    table = SensitivityTable()
    for label in Label:
        table.classes[label] = batch_sensitivity(forecaster, batch, label, batch_size, threads)
    return table


def evaluation_windows(
    cohort: Cohort,
    windows: WindowConfig,
    eval_split: str = "all",
    train_fraction: float = 0.8,
    seed: int = 0,
    by_subject: bool = False,
) -> WindowBatch:
    """
    All windows of ``cohort``, or with ``eval_split="holdout"`` only those the
    forecaster did not train on (same split as training).
    """
    batch = slide_cohort(cohort, windows.window, windows.step, windows.context_len)
    if eval_split == "all":
        return batch
    if eval_split != "holdout":
        raise ValueError(f"unknown eval_split '{eval_split}'; expected 'all' or 'holdout'")
    _, held_out = split_windows(batch, train_fraction, seed, by_subject)
    return held_out
