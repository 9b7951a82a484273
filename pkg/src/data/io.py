"""
Cohort storage: a manifest CSV plus one binary series file per subject.

Series layout: b"ICNS" | u32 channels | u32 T | channel-major little-endian f64.
"""

import logging
import struct
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from src.errors import DataValidationError, MissingArtifactError

from .schema import N_CHANNELS, REAL_SCHEMA_LENGTHS, Cohort, IcnRecord, Label

logger = logging.getLogger(__name__)

SERIES_MAGIC = b"ICNS"
MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = ["subject_id", "label", "T", "file"]
_HEADER = struct.Struct("<4sII")


def encode_series(series: np.ndarray) -> bytes:
    series = np.ascontiguousarray(series, dtype="<f8")
    channels, length = series.shape
    return _HEADER.pack(SERIES_MAGIC, channels, length) + series.tobytes()


def decode_series(blob: bytes, subject_id: str | None = None) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise DataValidationError("series file shorter than its header", subject_id)
    magic, channels, length = _HEADER.unpack_from(blob)
    if magic != SERIES_MAGIC:
        raise DataValidationError(f"bad series magic {magic!r}, expected {SERIES_MAGIC!r}", subject_id)
    expected = _HEADER.size + 8 * channels * length
    if len(blob) != expected:
        raise DataValidationError(f"series file has {len(blob)} bytes, header implies {expected}", subject_id)
    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return values.astype(np.float64).reshape(channels, length)


def save_cohort(cohort: Cohort, path: str | Path) -> Path:
    """Write ``manifest.csv`` and ``series/<subject_id>.icns`` under ``path``."""
    path = Path(path)
    series_dir = path / "series"
    series_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for record in cohort:
        rel = f"series/{record.subject_id}.icns"
        (path / rel).write_bytes(encode_series(record.series))
        rows.append({"subject_id": record.subject_id, "label": record.label.value, "T": record.length, "file": rel})
    frame = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    frame.to_csv(path / MANIFEST_NAME, index=False, lineterminator="\n")
    logger.info(f"Saved cohort of {len(cohort)} subjects to {path}")
    return path


def load_cohort(
    path: str | Path,
    allowed_lengths: Iterable[int] | None = REAL_SCHEMA_LENGTHS,
    n_channels: int = N_CHANNELS,
) -> Cohort:
    """
    Load and validate a cohort directory.

    Args:
        path: Directory holding ``manifest.csv`` and the series files
        allowed_lengths: Declared set of valid T values (None = any)
        n_channels: Required channel count

    Returns:
        Cohort ordered by subject_id

    Raises:
        MissingArtifactError: no manifest in ``path``
        DataValidationError: any record violates the schema (nothing is returned)
    """
    path = Path(path)
    manifest = path / MANIFEST_NAME
    if not manifest.exists():
        raise MissingArtifactError(f"cohort manifest {manifest}", "synth")

    frame = pd.read_csv(manifest, dtype=str, keep_default_na=False)
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{manifest}: missing columns {missing}; expected {MANIFEST_COLUMNS}")

    records = []
    for row in frame.itertuples(index=False):
        subject_id = row.subject_id
        label = Label.parse(row.label, subject_id)
        try:
            declared = int(row.T)
        except ValueError:
            raise DataValidationError(f"T column {row.T!r} is not an integer", subject_id) from None
        series_path = path / row.file
        if not series_path.exists():
            raise DataValidationError(f"series file {series_path} not found", subject_id)
        series = decode_series(series_path.read_bytes(), subject_id)
        if series.shape[1] != declared:
            raise DataValidationError(f"manifest declares T={declared} but file holds T={series.shape[1]}", subject_id)
        records.append(IcnRecord(subject_id, label, series).validate(allowed_lengths, n_channels))

    cohort = Cohort(tuple(records))
    logger.info(f"Loaded {len(cohort)} subjects from {path}: {cohort.to_dict()['class_counts']}")
    return cohort
