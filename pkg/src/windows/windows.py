"""
Sequence-length standardization and sliding-window segmentation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from src.data import Cohort, IcnRecord
from src.errors import DataValidationError, ShapeError

logger = logging.getLogger(__name__)


def truncate(record: IcnRecord, target_len: int = 137) -> IcnRecord:
    """Keep the first ``target_len`` timestamps."""
    if record.length < target_len:
        raise DataValidationError(f"cannot truncate T={record.length} to {target_len}", record.subject_id)
    if record.length == target_len:
        return record
    return record.with_series(record.series[:, :target_len])


def replicate(record: IcnRecord, target_len: int = 194) -> IcnRecord:
    """
    Extend a series to ``target_len`` by appending its own prefix.

    Only one pass of replication is allowed (``T <= target_len <= 2T``).
    """
    length = record.length
    if target_len < length:
        raise DataValidationError(f"replicate target {target_len} shorter than T={length}", record.subject_id)
    if target_len > 2 * length:
        raise DataValidationError(
            f"replicate target {target_len} exceeds 2T={2 * length}; single-pass replication insufficient",
            record.subject_id,
        )
    if target_len == length:
        return record
    extra = target_len - length
    return record.with_series(np.concatenate([record.series, record.series[:, :extra]], axis=1))


def n_windows(length: int, window: int = 24, step: int = 4) -> int:
    """Closed-form window count; trailing partial windows are dropped."""
    if length < window:
        return 0
    return (length - window) // step + 1


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """
    Segmented windows of one or more records.

    ``windows`` is [N x channels x window]; ``sources`` holds the
    (subject_id, start offset) each window was cut from. ``mask`` is a
    boolean vector over window positions once ``mask_tail`` was applied.
    """
    windows: np.ndarray
    context_len: int
    target_len: int
    sources: tuple[tuple[str, int], ...]
    labels: np.ndarray | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.windows.ndim != 3:
            raise ShapeError("WindowBatch", [self.windows.shape], "windows must be [N x channels x window]")
        if self.context_len + self.target_len != self.window_len:
            raise ShapeError(
                "WindowBatch",
                [self.windows.shape],
                f"context {self.context_len} + target {self.target_len} != window {self.window_len}",
            )
        if len(self.sources) != len(self.windows):
            raise ShapeError("WindowBatch", [self.windows.shape], f"{len(self.sources)} sources for {len(self.windows)} windows")

    def __len__(self) -> int:
        return int(self.windows.shape[0])

    @property
    def window_len(self) -> int:
        return int(self.windows.shape[2])

    @property
    def n_channels(self) -> int:
        return int(self.windows.shape[1])

    def time_major(self) -> np.ndarray:
        """Windows as [N x window x channels], the layout the models consume."""
        return np.ascontiguousarray(np.transpose(self.windows, (0, 2, 1)))

    def context(self) -> np.ndarray:
        return self.time_major()[:, :self.context_len, :]

    def target(self) -> np.ndarray:
        return self.time_major()[:, self.context_len:, :]

    def take(self, indices: Iterable[int]) -> "WindowBatch":
        idx = np.asarray(list(indices), dtype=np.int64)
        return replace(
            self,
            windows=self.windows[idx],
            sources=tuple(self.sources[i] for i in idx),
            labels=None if self.labels is None else self.labels[idx],
        )

    def with_windows(self, windows: np.ndarray) -> "WindowBatch":
        if windows.shape != self.windows.shape:
            raise ShapeError("WindowBatch.with_windows", [self.windows.shape, windows.shape])
        return replace(self, windows=windows)

    @property
    def subject_ids(self) -> list[str]:
        return sorted({s for s, _ in self.sources})

    def to_dict(self) -> dict:
        return {
            "n_windows": len(self),
            "window": self.window_len,
            "context_len": self.context_len,
            "target_len": self.target_len,
            "n_subjects": len(self.subject_ids),
            "masked_positions": None if self.mask is None else np.flatnonzero(self.mask).tolist(),
        }


def slide(record: IcnRecord, window: int = 24, step: int = 4, context_len: int = 20) -> WindowBatch:
    """Cut windows starting at 0, step, 2*step, ... that fit entirely inside the series."""
    if record.length < window:
        raise DataValidationError(f"T={record.length} shorter than window {window}", record.subject_id)
    count = n_windows(record.length, window, step)
    starts = [i * step for i in range(count)]
    windows = np.stack([record.series[:, s:s + window] for s in starts])
    return WindowBatch(
        windows=windows,
        context_len=context_len,
        target_len=window - context_len,
        sources=tuple((record.subject_id, s) for s in starts),
        labels=np.full(count, record.label.positive, dtype=np.int64),
    )


def slide_cohort(cohort: Cohort, window: int = 24, step: int = 4, context_len: int = 20) -> WindowBatch:
    """Windows of every record, concatenated in subject order."""
    batches = [slide(r, window, step, context_len) for r in cohort]
    if not batches:
        raise DataValidationError("cannot segment an empty cohort")
    batch = WindowBatch(
        windows=np.concatenate([b.windows for b in batches]),
        context_len=context_len,
        target_len=window - context_len,
        sources=tuple(s for b in batches for s in b.sources),
        labels=np.concatenate([b.labels for b in batches]),
    )
    logger.debug(f"Segmented {len(cohort)} records into {len(batch)} windows")
    return batch


def tail_mask(window: int, fraction: float = 1 / 6) -> np.ndarray:
    """Boolean vector marking the final ``window * fraction`` positions."""
    n_masked = window * fraction
    if abs(n_masked - round(n_masked)) > 1e-9 or round(n_masked) < 1:
        raise ShapeError("mask_tail", [(window,)], f"window {window} not divisible into fraction {fraction:.6g}")
    mask = np.zeros(window, dtype=bool)
    mask[window - int(round(n_masked)):] = True
    return mask


def mask_tail(batch: WindowBatch, fraction: float = 1 / 6) -> WindowBatch:
    """Attach a position mask covering the tail of every window (all channels)."""
    return replace(batch, mask=tail_mask(batch.window_len, fraction))


def split_windows(
    batch: WindowBatch,
    train_fraction: float,
    seed: int,
    by_subject: bool = False,
) -> tuple[WindowBatch, WindowBatch]:
    """
    Random train/validation split of windows.

    Args:
        batch: Windows to split
        train_fraction: Share of windows (or subjects) used for training
        seed: RNG seed
        by_subject: Split whole subjects instead of individual windows
    """
    if len(batch) < 2:
        raise DataValidationError(f"need at least 2 windows to split, got {len(batch)}")
    rng = np.random.default_rng(seed)
    if by_subject:
        subjects = batch.subject_ids
        if len(subjects) < 2:
            raise DataValidationError("subject-level split needs at least 2 subjects")
        order = rng.permutation(len(subjects))
        n_train = min(max(int(round(train_fraction * len(subjects))), 1), len(subjects) - 1)
        train_subjects = {subjects[i] for i in order[:n_train]}
        in_train = np.array([s in train_subjects for s, _ in batch.sources])
        train_idx = np.flatnonzero(in_train)
        val_idx = np.flatnonzero(~in_train)
    else:
        order = rng.permutation(len(batch))
        n_train = min(max(int(round(train_fraction * len(batch))), 1), len(batch) - 1)
        train_idx = np.sort(order[:n_train])
        val_idx = np.sort(order[n_train:])
    return batch.take(train_idx), batch.take(val_idx)
