"""
Forecaster - a trained generative forecasting model and its checkpoint.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from src.config import BrainLmConfig, LstmConfig, WindowConfig
from src.errors import CheckpointError, MissingArtifactError, ShapeError
from src.numerics import ModelParams, Tensor, no_grad, ops
from src.windows import WindowBatch, tail_mask

from .brainlm import brainlm_forward, init_brainlm, reconstruction_loss
from .lstm import init_lstm_forecaster, lstm_forward

logger = logging.getLogger(__name__)


class ForecastModel(str, Enum):
    """Forecaster architecture."""
    LSTM = "lstm"
    BRAINLM = "brainlm"


@dataclass
class Forecaster:
    """
    Parameters plus the architecture description needed to run them.

    ``hyper`` always carries ``n_channels``, ``context_len``, ``horizon`` and
    ``window``; BrainLM adds ``n_heads``, ``mask_fraction`` and ``loss_on``.
    """
    kind: ForecastModel
    params: ModelParams
    hyper: dict
    base_length: int | None = None
    trained: bool = False
    evaluation: dict = field(default_factory=dict)

    @classmethod
    def create(
        cls,
        kind: ForecastModel | str,
        windows: WindowConfig | None = None,
        lstm: LstmConfig | None = None,
        brainlm: BrainLmConfig | None = None,
        n_channels: int = 53,
        seed: int = 0,
    ) -> "Forecaster":
        kind = ForecastModel(kind)
        windows = windows or WindowConfig()
        hyper = {
            "n_channels": n_channels,
            "context_len": windows.context_len,
            "horizon": windows.target_len,
            "window": windows.window,
        }
        if kind is ForecastModel.LSTM:
            lstm = lstm or LstmConfig()
            hyper["hidden"] = lstm.hidden
            params = init_lstm_forecaster(lstm, n_channels, windows.target_len, seed)
        else:
            brainlm = brainlm or BrainLmConfig()
            mask = tail_mask(windows.window, windows.mask_fraction)
            if int(mask.sum()) != windows.target_len:
                raise ShapeError(
                    "Forecaster.create",
                    [(windows.window,)],
                    f"mask covers {int(mask.sum())} positions but horizon is {windows.target_len}",
                )
            hyper.update(
                d_model=brainlm.d_model,
                n_heads=brainlm.n_heads,
                mask_fraction=windows.mask_fraction,
                loss_on=brainlm.loss_on,
            )
            params = init_brainlm(brainlm, n_channels, windows.window, seed)
        return cls(kind=kind, params=params, hyper=hyper)

    # ------------------------------------------------------------------
    # Computation
    # ------------------------------------------------------------------

    @property
    def context_len(self) -> int:
        return int(self.hyper["context_len"])

    @property
    def horizon(self) -> int:
        return int(self.hyper["horizon"])

    @property
    def mask(self) -> np.ndarray:
        return tail_mask(int(self.hyper["window"]), float(self.hyper["mask_fraction"]))

    def loss(self, batch: WindowBatch) -> Tensor:
        """Training objective on one batch of windows."""
        if self.kind is ForecastModel.LSTM:
            prediction = lstm_forward(self.params, batch.context(), self.context_len)
            return ops.mse(prediction, batch.target())
        mask = batch.mask if batch.mask is not None else self.mask
        return reconstruction_loss(
            self.params, batch.time_major(), mask, int(self.hyper["n_heads"]), self.hyper["loss_on"]
        )

    def forecast(self, windows: np.ndarray) -> np.ndarray:
        """
        Predicted target block [B x horizon x channels].

        ``windows`` is [B x window x channels]; the LSTM reads only the
        context part, BrainLM reads the whole window with its tail masked.
        """
        windows = np.asarray(windows, dtype=np.float64)
        with no_grad():
            if self.kind is ForecastModel.LSTM:
                out = lstm_forward(self.params, windows[:, :self.context_len, :], self.context_len)
                return out.data
            reconstruction = brainlm_forward(self.params, windows, self.mask, int(self.hyper["n_heads"]))
            return reconstruction.data[:, self.context_len:, :]

    def evaluate(self, batch: WindowBatch, batch_size: int = 256) -> float:
        """MSE over the target positions of ``batch`` (the quantity compared with baselines)."""
        total = 0.0
        count = 0
        windows = batch.time_major()
        for start in range(0, len(batch), batch_size):
            chunk = windows[start:start + batch_size]
            diff = self.forecast(chunk) - chunk[:, self.context_len:, :]
            total += float((diff * diff).sum())
            count += diff.size
        return total / count

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "hyper": self.hyper,
            "base_length": self.base_length,
            "trained": self.trained,
            "n_parameters": self.params.n_parameters,
            "evaluation": self.evaluation,
        }

    def save(self, path: str | Path, config_hash: str | None = None) -> Path:
        """Write the binary checkpoint and its ``.json`` sidecar."""
        path = Path(path)
        self.params.save(path)
        meta = self.to_dict() | {"config_hash": config_hash}
        sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"Saved {self.kind.value} forecaster to {path}")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Forecaster":
        path = Path(path)
        if not path.exists() or not sidecar(path).exists():
            raise MissingArtifactError(f"forecaster checkpoint {path}", "train-forecaster")
        try:
            meta = json.loads(sidecar(path).read_text(encoding="utf-8"))
            kind = ForecastModel(meta["kind"])
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise CheckpointError(f"{sidecar(path)}: unreadable forecaster metadata ({e})") from None
        return cls(
            kind=kind,
            params=ModelParams.load(path),
            hyper=meta["hyper"],
            base_length=meta.get("base_length"),
            trained=bool(meta.get("trained", False)),
            evaluation=meta.get("evaluation", {}),
        )


def sidecar(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def last_value_baseline_mse(batch: WindowBatch) -> float:
    """MSE of repeating each channel's final context value over the horizon."""
    windows = batch.time_major()
    last = windows[:, batch.context_len - 1:batch.context_len, :]
    diff = windows[:, batch.context_len:, :] - last
    return float((diff * diff).mean())
