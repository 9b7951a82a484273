"""
ICN Dataset Schema
Subject records, channel metadata and cohorts of IC time courses.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from src.errors import DataValidationError

N_CHANNELS = 53
REAL_SCHEMA_LENGTHS = (137, 194)


class Label(str, Enum):
    """Diagnostic group."""
    CN = "CN"  # cognitively normal, CDR = 0
    AD = "AD"  # Alzheimer's disease

    @classmethod
    def parse(cls, value: str, subject_id: str | None = None) -> "Label":
        try:
            return cls(str(value).strip())
        except ValueError:
            allowed = ", ".join(m.value for m in cls)
            raise DataValidationError(f"label {value!r} not in allowed labels {{{allowed}}}", subject_id) from None

    @property
    def positive(self) -> int:
        """1 for the positive (AD) class."""
        return int(self is Label.AD)


class Domain(str, Enum):
    """Functional domain of an independent component."""
    SUBCORTICAL = "subcortical"
    AUDITORY = "auditory"
    SENSORIMOTOR = "sensorimotor"
    VISUAL = "visual"
    COGNITIVE_CONTROL = "cognitive-control"
    DEFAULT_MODE = "default-mode"
    CEREBELLAR = "cerebellar"


DOMAIN_SIZES: dict[Domain, int] = {
    Domain.SUBCORTICAL: 5,
    Domain.AUDITORY: 2,
    Domain.SENSORIMOTOR: 9,
    Domain.VISUAL: 9,
    Domain.COGNITIVE_CONTROL: 17,
    Domain.DEFAULT_MODE: 7,
    Domain.CEREBELLAR: 4,
}


@dataclass(frozen=True)
class ChannelMeta:
    """One IC channel and the domain it belongs to."""
    index: int
    domain: Domain

    def to_dict(self) -> dict:
        return {"index": self.index, "domain": self.domain.value}


def _build_channels() -> tuple[ChannelMeta, ...]:
    channels = []
    for domain, count in DOMAIN_SIZES.items():
        channels.extend(ChannelMeta(len(channels), domain) for _ in range(count))
    assert len(channels) == N_CHANNELS
    return tuple(channels)


CHANNELS: tuple[ChannelMeta, ...] = _build_channels()


def channel_domain(index: int) -> Domain:
    return CHANNELS[index].domain


@dataclass(frozen=True, eq=False)
class IcnRecord:
    """One subject's IC time courses: ``series`` is [channels x T]."""
    subject_id: str
    label: Label
    series: np.ndarray

    @property
    def length(self) -> int:
        return int(self.series.shape[1])

    @property
    def n_channels(self) -> int:
        return int(self.series.shape[0])

    def validate(self, allowed_lengths: Iterable[int] | None = None, n_channels: int = N_CHANNELS) -> "IcnRecord":
        """
        Check the record invariants; returns self for chaining.

        Raises:
            DataValidationError: wrong rank, channel count, length or non-finite values
        """
        if self.series.ndim != 2:
            raise DataValidationError(f"series must be 2-D [channels x T], got shape {self.series.shape}", self.subject_id)
        if self.n_channels != n_channels:
            raise DataValidationError(f"expected {n_channels} channels, found {self.n_channels}", self.subject_id)
        if allowed_lengths is not None:
            allowed = sorted(set(allowed_lengths))
            if self.length not in allowed:
                raise DataValidationError(f"T={self.length} not in declared lengths {allowed}", self.subject_id)
        if not np.isfinite(self.series).all():
            bad = np.argwhere(~np.isfinite(self.series))[0]
            raise DataValidationError(f"non-finite value at channel {bad[0]}, t={bad[1]}", self.subject_id)
        return self

    def with_series(self, series: np.ndarray) -> "IcnRecord":
        return IcnRecord(self.subject_id, self.label, np.ascontiguousarray(series, dtype=np.float64))

    def equals(self, other: "IcnRecord") -> bool:
        """Bit-exact comparison."""
        return (
            self.subject_id == other.subject_id
            and self.label is other.label
            and self.series.shape == other.series.shape
            and self.series.tobytes() == other.series.tobytes()
        )

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "label": self.label.value,
            "T": self.length,
            "channels": self.n_channels,
        }


@dataclass(frozen=True, eq=False)
class Cohort:
    """Immutable collection of records ordered by subject id."""
    records: tuple[IcnRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ordered = tuple(sorted(self.records, key=lambda r: r.subject_id))
        seen = Counter(r.subject_id for r in ordered)
        duplicates = sorted(s for s, n in seen.items() if n > 1)
        if duplicates:
            raise DataValidationError(f"duplicate subject_id(s): {duplicates}")
        object.__setattr__(self, "records", ordered)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def subject_ids(self) -> list[str]:
        return [r.subject_id for r in self.records]

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label.positive for r in self.records], dtype=np.int64)

    @property
    def class_counts(self) -> dict[Label, int]:
        counts = Counter(r.label for r in self.records)
        return {label: counts.get(label, 0) for label in Label}

    @property
    def lengths(self) -> list[int]:
        return [r.length for r in self.records]

    @property
    def uniform_length(self) -> int | None:
        """Common T if every record has the same length, else None."""
        lengths = set(self.lengths)
        return lengths.pop() if len(lengths) == 1 else None

    def get(self, subject_id: str) -> IcnRecord:
        for r in self.records:
            if r.subject_id == subject_id:
                return r
        raise KeyError(subject_id)

    def subset(self, subject_ids: Iterable[str]) -> "Cohort":
        wanted = set(subject_ids)
        return Cohort(tuple(r for r in self.records if r.subject_id in wanted))

    def by_label(self, label: Label) -> "Cohort":
        return Cohort(tuple(r for r in self.records if r.label is label))

    def map(self, fn) -> "Cohort":
        return Cohort(tuple(fn(r) for r in self.records))

    def series_array(self) -> np.ndarray:
        """Stack to [N x channels x T]; requires a uniform length."""
        if self.uniform_length is None:
            raise DataValidationError(f"records have mixed lengths {sorted(set(self.lengths))}")
        return np.stack([r.series for r in self.records])

    def equals(self, other: "Cohort") -> bool:
        return len(self) == len(other) and all(a.equals(b) for a, b in zip(self.records, other.records))

    def to_dict(self) -> dict:
        return {
            "n_subjects": len(self),
            "class_counts": {k.value: v for k, v in self.class_counts.items()},
            "lengths": sorted(set(self.lengths)),
        }


def zscore(record: IcnRecord, min_std: float = 1e-12) -> IcnRecord:
    """
    Per-channel z-scoring with the population standard deviation.

    Raises:
        DataValidationError: a channel is constant (std <= ``min_std``)
    """
    series = record.series
    mu = series.mean(axis=1, keepdims=True)
    sigma = series.std(axis=1, keepdims=True)
    flat = np.flatnonzero(sigma[:, 0] <= min_std)
    if flat.size:
        raise DataValidationError(f"channel {int(flat[0])} is constant (std <= {min_std}); cannot z-score", record.subject_id)
    return record.with_series((series - mu) / sigma)


def zscore_cohort(cohort: Cohort) -> Cohort:
    return cohort.map(zscore)
