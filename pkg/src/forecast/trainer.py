"""
Forecaster training loop: Adam on minibatches of windows, per-epoch curves,
and a held-out evaluation against the last-value-hold baseline.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.config import BrainLmConfig, ForecastTrainConfig, LstmConfig, WindowConfig
from src.errors import DataValidationError, TrainingDivergedError
from src.numerics import Adam
from src.windows import WindowBatch, mask_tail, split_windows

from .model import ForecastModel, Forecaster, last_value_baseline_mse

logger = logging.getLogger(__name__)


@dataclass
class ForecastResult:
    """Trained forecaster plus its learning curves."""
    forecaster: Forecaster
    train_curve: list[float] = field(default_factory=list)
    val_curve: list[float] = field(default_factory=list)
    val_mse: float = float("nan")
    baseline_mse: float = float("nan")
    n_train: int = 0
    n_val: int = 0

    @property
    def skill(self) -> float:
        """1 - model/baseline; positive when the model beats holding the last value."""
        if not self.baseline_mse > 0:
            return float("nan")
        return 1.0 - self.val_mse / self.baseline_mse

    def to_dict(self) -> dict:
        return {
            "val_mse": self.val_mse,
            "baseline_mse": self.baseline_mse,
            "skill": self.skill,
            "n_train_windows": self.n_train,
            "n_val_windows": self.n_val,
            "epochs": len(self.train_curve),
            "final_train_loss": self.train_curve[-1] if self.train_curve else None,
        }


def train_forecaster(
    kind: ForecastModel | str,
    batch: WindowBatch,
    config: ForecastTrainConfig | None = None,
    windows: WindowConfig | None = None,
    lstm: LstmConfig | None = None,
    brainlm: BrainLmConfig | None = None,
    base_length: int | None = None,
) -> ForecastResult:
    """
    Train one forecaster on ``train_fraction`` of ``batch`` and evaluate on the rest.

    Args:
        kind: ``"lstm"`` or ``"brainlm"``
        batch: Segmented windows of the training cohort
        config: Optimizer and schedule settings
        windows: Window geometry (context/horizon/mask fraction)
        lstm: LSTM architecture (used when ``kind == "lstm"``)
        brainlm: BrainLM architecture (used when ``kind == "brainlm"``)
        base_length: Series length the windows were cut from, stored with the model

    Raises:
        DataValidationError: fewer than 2 windows
        TrainingDivergedError: the loss becomes NaN or infinite
    """
    config = config or ForecastTrainConfig()
    windows = windows or WindowConfig()
    kind = ForecastModel(kind)
    if len(batch) < 2:
        raise DataValidationError(f"train_forecaster needs at least 2 windows, got {len(batch)}")

    batch = mask_tail(batch, windows.mask_fraction)
    train, val = split_windows(batch, config.train_fraction, config.seed, config.split_by_subject)
    forecaster = Forecaster.create(kind, windows, lstm, brainlm, batch.n_channels, config.seed)
    forecaster.base_length = base_length
    optimizer = Adam(forecaster.params, config.lr, config.beta1, config.beta2, config.epsilon)
    rng = np.random.default_rng(config.seed)

    result = ForecastResult(forecaster=forecaster, n_train=len(train), n_val=len(val))
    logger.info(
        f"Training {kind.value} forecaster: {len(train)} train / {len(val)} val windows, "
        f"{forecaster.params.n_parameters} parameters, {config.epochs} epochs"
    )

    for epoch in range(config.epochs):
        order = rng.permutation(len(train))
        total = 0.0
        for b, start in enumerate(range(0, len(train), config.batch_size)):
            minibatch = train.take(order[start:start + config.batch_size])
            optimizer.zero_grad()
            loss = forecaster.loss(minibatch)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDivergedError(kind.value, epoch, b, value)
            loss.backward()
            optimizer.step()
            total += value * len(minibatch)

        result.train_curve.append(total / len(train))
        result.val_curve.append(forecaster.evaluate(val))
        logger.debug(f"[{kind.value}] epoch {epoch}: train {result.train_curve[-1]:.6f} val {result.val_curve[-1]:.6f}")
        if (epoch + 1) % config.log_every == 0 or epoch + 1 == config.epochs:
            logger.info(
                f"[{kind.value}] epoch {epoch + 1}/{config.epochs}: "
                f"train loss {result.train_curve[-1]:.6f}, val MSE {result.val_curve[-1]:.6f}"
            )

    result.val_mse = forecaster.evaluate(val)
    result.baseline_mse = last_value_baseline_mse(val)
    forecaster.trained = True
    forecaster.evaluation = result.to_dict()
    logger.info(
        f"{kind.value} forecaster done: val MSE {result.val_mse:.6f} vs last-value baseline "
        f"{result.baseline_mse:.6f} (skill {result.skill:+.3f})"
    )
    return result
