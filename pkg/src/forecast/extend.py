"""
Generative extension: append forecasted timestamps to a series.
"""

import logging
import zlib

import numpy as np

from src.data import Cohort, IcnRecord
from src.errors import DataValidationError, MissingArtifactError, ShapeError

from .model import ForecastModel, Forecaster

logger = logging.getLogger(__name__)


def placeholder_rng(seed: int, subject_id: str) -> np.random.Generator:
    """Per-subject stream, independent of cohort order and of other subjects."""
    return np.random.default_rng([seed, zlib.crc32(subject_id.encode("utf-8"))])


def extend_series(record: IcnRecord, forecaster: Forecaster | None, steps: int = 4, seed: int = 0) -> IcnRecord:
    """
    Return ``record`` with ``steps`` forecasted timestamps appended.

    The LSTM reads the last ``context_len`` timestamps. BrainLM reads the
    same context followed by ``steps`` standard-normal placeholder
    timestamps, masked, and the reconstruction of the masked tail is
    appended. The original timestamps are kept bit-for-bit.

    Raises:
        MissingArtifactError: no forecaster, or one that was never trained
        ShapeError: ``steps`` differs from the forecaster's horizon
        DataValidationError: the series is shorter than the context
    """
    if forecaster is None or not forecaster.trained:
        raise MissingArtifactError("trained forecaster checkpoint", "train-forecaster")
    if steps != forecaster.horizon:
        raise ShapeError(
            "extend_series",
            [record.series.shape],
            f"forecaster emits {forecaster.horizon} steps, {steps} requested",
        )
    context_len = forecaster.context_len
    if record.length < context_len:
        raise DataValidationError(f"T={record.length} shorter than forecasting context {context_len}", record.subject_id)

    context = record.series[:, -context_len:].T
    if forecaster.kind is ForecastModel.BRAINLM:
        tail = placeholder_rng(seed, record.subject_id).standard_normal((steps, record.n_channels))
    else:
        tail = np.zeros((steps, record.n_channels))
    window = np.concatenate([context, tail])[None, :, :]
    block = forecaster.forecast(window)[0]
    return record.with_series(np.concatenate([record.series, block.T], axis=1))


def extend_cohort(cohort: Cohort, forecaster: Forecaster | None, steps: int = 4, seed: int = 0) -> Cohort:
    # checked up front: an empty cohort never reaches extend_series
    if forecaster is None or not forecaster.trained:
        raise MissingArtifactError("trained forecaster checkpoint", "train-forecaster")
    extended = cohort.map(lambda r: extend_series(r, forecaster, steps, seed))
    logger.info(
        f"Extended {len(cohort)} records by {steps} steps with "
        f"{forecaster.kind.value} forecaster (T {sorted(set(cohort.lengths))} -> {sorted(set(extended.lengths))})"
    )
    return extended
