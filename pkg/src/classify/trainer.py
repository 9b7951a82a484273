"""
TA-LSTM training with best-validation-AUC model selection.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from src.config import ClassifierTrainConfig
from src.data import Cohort, Label
from src.errors import CheckpointError, DataValidationError, MissingArtifactError, SplitError, TrainingDivergedError
from src.numerics import Adam, ModelParams, no_grad

from .ta_lstm import classifier_loss, init_ta_lstm, ta_lstm_forward

logger = logging.getLogger(__name__)


def cohort_inputs(cohort: Cohort) -> tuple[np.ndarray, np.ndarray]:
    """Stack a uniform-length cohort to ([N x T x channels], labels)."""
    return np.ascontiguousarray(np.transpose(cohort.series_array(), (0, 2, 1))), cohort.labels


@dataclass
class Classifier:
    """TA-LSTM parameters plus the read-out they were trained for."""
    params: ModelParams
    readout: str = "context"
    length: int | None = None

    def predict(self, series: np.ndarray, batch_size: int = 64):
        """Probabilities and attention weights for [N x T x channels]."""
        probabilities, attention = [], []
        with no_grad():
            for start in range(0, len(series), batch_size):
                out = ta_lstm_forward(self.params, series[start:start + batch_size], self.readout)
                probabilities.append(out.probability)
                attention.append(out.attention)
        return np.concatenate(probabilities), np.concatenate(attention)

    def predict_proba(self, cohort: Cohort, batch_size: int = 64) -> np.ndarray:
        series, _ = cohort_inputs(cohort)
        return self.predict(series, batch_size)[0]

    def attention_frame(self, cohort: Cohort, batch_size: int = 64) -> pd.DataFrame:
        """Long-format attention weights: subject_id, label, position, weight."""
        series, _ = cohort_inputs(cohort)
        _, attention = self.predict(series, batch_size)
        rows = [
            {"subject_id": record.subject_id, "label": record.label.value, "position": t, "weight": float(w)}
            for record, weights in zip(cohort, attention)
            for t, w in enumerate(weights)
        ]
        return pd.DataFrame(rows, columns=["subject_id", "label", "position", "weight"])

    def save(self, path: str | Path, config_hash: str | None = None) -> Path:
        path = Path(path)
        self.params.save(path)
        meta = {"readout": self.readout, "length": self.length, "config_hash": config_hash}
        path.with_name(path.name + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Classifier":
        path = Path(path)
        meta_path = path.with_name(path.name + ".json")
        if not path.exists() or not meta_path.exists():
            raise MissingArtifactError(f"classifier checkpoint {path}", "train-classifier")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CheckpointError(f"{meta_path}: {e}") from None
        return cls(ModelParams.load(path), meta.get("readout", "context"), meta.get("length"))


@dataclass
class ClassifierResult:
    """Best-validation checkpoint and the per-epoch record that selected it."""
    classifier: Classifier
    best_epoch: int
    best_val_auc: float
    history: list[dict] = field(default_factory=list)

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=["epoch", "train_loss", "val_auc"])

    def to_dict(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "best_val_auc": self.best_val_auc,
            "epochs": len(self.history) - 1,
            "readout": self.classifier.readout,
        }


def _require_both_classes(cohort: Cohort, name: str) -> None:
    counts = cohort.class_counts
    missing = [label.value for label in Label if counts[label] == 0]
    if missing:
        raise SplitError(f"{name} split has no {', '.join(missing)} subjects; both classes are required")


def train_classifier(
    train: Cohort,
    val: Cohort,
    config: ClassifierTrainConfig | None = None,
    seed: int | None = None,
) -> ClassifierResult:
    """
    Train a TA-LSTM with BCE and keep the parameters of the best validation AUC.

    Epoch 0 is the initialization; ties keep the earlier epoch.

    Raises:
        SplitError: ``train`` or ``val`` lacks a class
        DataValidationError: records have mixed lengths
        TrainingDivergedError: the loss becomes NaN or infinite
    """
    from src.experiment.metrics import auc

    config = config or ClassifierTrainConfig()
    seed = config.seed if seed is None else seed
    _require_both_classes(train, "train")
    _require_both_classes(val, "validation")
    x_train, y_train = cohort_inputs(train)
    x_val, y_val = cohort_inputs(val)
    if x_train.shape[1] != x_val.shape[1]:
        raise DataValidationError(f"train T={x_train.shape[1]} differs from validation T={x_val.shape[1]}")

    length = x_train.shape[1]
    params = init_ta_lstm(
        n_channels=x_train.shape[2],
        hidden=config.hidden,
        n_layers=config.n_layers,
        readout=config.readout,
        length=length,
        forget_bias=config.forget_bias,
        seed=seed,
    )
    classifier = Classifier(params, config.readout, length if config.readout == "scores" else None)
    optimizer = Adam(params, config.lr, config.beta1, config.beta2, config.epsilon)
    rng = np.random.default_rng(seed)

    def validation_auc() -> float:
        return auc(classifier.predict(x_val)[0], y_val)

    best_auc = validation_auc()
    best_epoch = 0
    best_arrays = params.arrays()
    history = [{"epoch": 0, "train_loss": float("nan"), "val_auc": best_auc}]
    logger.info(
        f"Training TA-LSTM ({config.readout} read-out): {len(train)} train / {len(val)} val subjects, "
        f"T={length}, {params.n_parameters} parameters, {config.epochs} epochs"
    )

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(x_train))
        total = 0.0
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start:start + config.batch_size]
            optimizer.zero_grad()
            loss = classifier_loss(params, x_train[idx], y_train[idx], config.readout)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDivergedError("ta_lstm", epoch, b, value)
            loss.backward()
            optimizer.step()
            total += value * len(idx)

        val_auc = validation_auc()
        history.append({"epoch": epoch, "train_loss": total / len(x_train), "val_auc": val_auc})
        if val_auc > best_auc:
            best_auc, best_epoch, best_arrays = val_auc, epoch, params.arrays()
        if epoch % config.log_every == 0 or epoch == config.epochs:
            logger.info(
                f"[ta_lstm] epoch {epoch}/{config.epochs}: train loss {total / len(x_train):.5f}, "
                f"val AUC {val_auc:.4f} (best {best_auc:.4f} @ {best_epoch})"
            )

    params.assign(best_arrays)
    return ClassifierResult(classifier, best_epoch, best_auc, history)
